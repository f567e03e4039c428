#pragma once

// JSON state-set documents:
//
//   {
//     "dimension": 2,
//     "states": [[[0.70710678118654757, 0], [0.70710678118654757, 0]], ...],
//     "epsilons": [0.01, 0.01, 0.01],        // optional, infidelity upper bounds
//     "u": [0.005, 0.005, 0.005],             // optional, infidelity lower bounds
//     "labels": ["a", "b", "c"],              // optional
//     "mub_partition": [[0, 1], [2, 3]]       // optional, two orthonormal bases
//   }
//
// Complex amplitudes are always [re, im] pairs.

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fidbound/certificate.hpp"
#include "fidbound/errors.hpp"
#include "fidbound/state_sets.hpp"

namespace fidbound::io {

// Malformed or invalid document; the message names the offending field.
class DocumentError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

// Amplitude vectors whose norm is within this distance of 1 are re-normalized
// with a warning; anything further off is rejected.
inline constexpr double renormalize_tolerance = 1e-6;

struct StateSetDocument {
  StateSet set;
  std::optional<std::vector<double>> epsilons;
  std::optional<std::vector<double>> u;
  std::optional<std::pair<std::vector<int>, std::vector<int>>> mub_partition;
  std::vector<std::string> warnings;
};

namespace detail {

using nlohmann::json;

inline std::string line_column(const std::string &text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline double number(const json &j, const std::string &where) {
  if (!j.is_number()) throw DocumentError(where + ": expected a number, got " + std::string(j.type_name()));
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw DocumentError(where + ": value is not finite");
  return v;
}

inline std::vector<double> real_list(const json &doc, const char *key, std::size_t expected) {
  const json &j = doc.at(key);
  const std::string field = std::string("\"") + key + "\"";
  if (!j.is_array()) throw DocumentError(field + ": expected an array");
  if (j.size() != expected)
    throw DocumentError(field + ": expected " + std::to_string(expected) + " entries (one per state), got " +
                        std::to_string(j.size()));
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const double v = number(j[k], field + "[" + std::to_string(k) + "]");
    if (v < 0.0 || v > 1.0) throw DocumentError(field + "[" + std::to_string(k) + "]: must lie in [0, 1]");
    out.push_back(v);
  }
  return out;
}

inline std::vector<int> index_list(const json &j, const std::string &where, int n) {
  if (!j.is_array()) throw DocumentError(where + ": expected an array of state indices");
  std::vector<int> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number_integer()) throw DocumentError(where + "[" + std::to_string(k) + "]: expected an integer");
    const int v = j[k].get<int>();
    if (v < 0 || v >= n) throw DocumentError(where + "[" + std::to_string(k) + "]: index out of range");
    out.push_back(v);
  }
  return out;
}

} // namespace detail

inline StateSetDocument parse_document(const std::string &text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw DocumentError("malformed JSON at " + detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0) + ": " +
                        e.what());
  }
  if (!doc.is_object()) throw DocumentError("document root must be an object");
  if (!doc.contains("dimension")) throw DocumentError("missing field \"dimension\"");
  if (!doc["dimension"].is_number_integer()) throw DocumentError("\"dimension\": expected an integer");
  const int d = doc["dimension"].get<int>();
  if (d < 1 || d > 32) throw DocumentError("\"dimension\": must lie in [1, 32]");
  if (!doc.contains("states")) throw DocumentError("missing field \"states\"");
  const json &states = doc["states"];
  if (!states.is_array() || states.empty()) throw DocumentError("\"states\": expected a non-empty array");

  StateSetDocument out;
  std::vector<PureState> psi;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const std::string where = "\"states\"[" + std::to_string(k) + "]";
    const json &s = states[k];
    if (!s.is_array()) throw DocumentError(where + ": expected an array of [re, im] pairs");
    if (s.size() != static_cast<std::size_t>(d))
      throw DocumentError(where + ": expected " + std::to_string(d) + " amplitudes, got " + std::to_string(s.size()));
    CVector v(d);
    for (int i = 0; i < d; ++i) {
      const std::string at = where + "[" + std::to_string(i) + "]";
      const json &c = s[static_cast<std::size_t>(i)];
      if (!c.is_array() || c.size() != 2) throw DocumentError(at + ": expected a [re, im] pair");
      v(i) = cplx(detail::number(c[0], at + "[0]"), detail::number(c[1], at + "[1]"));
    }
    const double norm = v.norm();
    if (!(std::abs(norm - 1.0) <= renormalize_tolerance))
      throw DocumentError(where + ": norm " + format_double(norm, 10) + " differs from 1 by more than " +
                          format_double(renormalize_tolerance, 3));
    if (std::abs(norm - 1.0) > tolerance::state_norm) {
      out.warnings.push_back(where + ": norm " + format_double(norm, 12) + " re-normalized");
      v /= norm;
    }
    psi.emplace_back(std::move(v));
  }
  const int n = static_cast<int>(psi.size());

  std::vector<std::string> labels;
  if (doc.contains("labels")) {
    const json &l = doc["labels"];
    if (!l.is_array() || l.size() != psi.size())
      throw DocumentError("\"labels\": expected one string per state");
    for (std::size_t k = 0; k < l.size(); ++k) {
      if (!l[k].is_string()) throw DocumentError("\"labels\"[" + std::to_string(k) + "]: expected a string");
      labels.push_back(l[k].get<std::string>());
    }
  }
  out.set = StateSet(d, std::move(psi), std::move(labels));

  if (doc.contains("epsilons")) out.epsilons = detail::real_list(doc, "epsilons", static_cast<std::size_t>(n));
  if (doc.contains("u")) out.u = detail::real_list(doc, "u", static_cast<std::size_t>(n));
  if (doc.contains("mub_partition")) {
    const json &mp = doc["mub_partition"];
    if (!mp.is_array() || mp.size() != 2)
      throw DocumentError("\"mub_partition\": expected two arrays of state indices");
    out.mub_partition = std::pair{detail::index_list(mp[0], "\"mub_partition\"[0]", n),
                                  detail::index_list(mp[1], "\"mub_partition\"[1]", n)};
  }
  return out;
}

inline StateSetDocument load_document(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DocumentError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_document(ss.str());
  } catch (const DocumentError &e) {
    throw DocumentError(path + ": " + e.what());
  }
}

// Doubles are written in shortest round-trip form (up to 17 significant digits).
inline std::string serialize_document(const StateSetDocument &doc, int indent = 2) {
  using detail::json;
  json j;
  j["dimension"] = doc.set.dim();
  json states = json::array();
  for (const auto &s : doc.set.states()) {
    json amps = json::array();
    for (int i = 0; i < s.dim(); ++i) amps.push_back(json::array({s(i).real(), s(i).imag()}));
    states.push_back(std::move(amps));
  }
  j["states"] = std::move(states);
  if (doc.epsilons) j["epsilons"] = *doc.epsilons;
  if (doc.u) j["u"] = *doc.u;
  if (!doc.set.labels().empty()) j["labels"] = doc.set.labels();
  if (doc.mub_partition) j["mub_partition"] = json::array({doc.mub_partition->first, doc.mub_partition->second});
  return j.dump(indent) + "\n";
}

inline StateSetDocument make_document(StateSet set, std::optional<std::vector<double>> eps = std::nullopt) {
  StateSetDocument doc;
  doc.set = std::move(set);
  doc.epsilons = std::move(eps);
  return doc;
}

} // namespace fidbound::io
