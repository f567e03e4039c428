#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "fidbound/state_sets.hpp"

namespace fidbound {

enum class BoundMethod { sqrt_eps, symmetric_povm, hofmann, sdp_min, sdp_max };

inline std::string_view method_name(BoundMethod m) {
  switch (m) {
  case BoundMethod::sqrt_eps: return "sqrt-eps";
  case BoundMethod::symmetric_povm: return "symmetric-povm";
  case BoundMethod::hofmann: return "hofmann";
  case BoundMethod::sdp_min: return "sdp-min";
  case BoundMethod::sdp_max: return "sdp-max";
  }
  return "unknown";
}

// Lower and/or upper bound on the process fidelity together with what it was
// computed from.
struct BoundCertificate {
  BoundMethod method = BoundMethod::sqrt_eps;
  std::optional<double> lower;
  std::optional<double> upper;
  std::string inputs_digest;
  bool asymptotic = false; // valid to leading order in sqrt(eps) only
  std::map<std::string, std::string> metadata;

  bool consistent() const { return !lower || !upper || *lower <= *upper; }
};

// 64-bit FNV-1a, rendered as 16 hex digits.
class Fnv1a {
public:
  void add_bytes(const void *data, std::size_t size) {
    const auto *p = static_cast<const unsigned char *>(data);
    for (std::size_t i = 0; i < size; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  void add(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v); // fold -0.0
    add_bytes(&bits, sizeof bits);
  }
  void add(std::int64_t v) { add_bytes(&v, sizeof v); }

  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_));
    return buf;
  }

private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

inline std::string inputs_digest(const StateSet &set, std::span<const double> eps,
                                 std::span<const double> u = {}) {
  Fnv1a h;
  h.add(static_cast<std::int64_t>(set.dim()));
  h.add(static_cast<std::int64_t>(set.size()));
  for (const auto &s : set.states())
    for (int i = 0; i < s.dim(); ++i) {
      h.add(s(i).real());
      h.add(s(i).imag());
    }
  h.add(static_cast<std::int64_t>(eps.size()));
  for (double e : eps) h.add(e);
  h.add(static_cast<std::int64_t>(u.size()));
  for (double e : u) h.add(e);
  return h.hex();
}

inline std::string format_double(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

} // namespace fidbound
