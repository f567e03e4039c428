#pragma once

// Closed-form fidelity bounds:
//  * the sqrt(eps) lower bound for any identifying set, built from minimum
//    weight paths in the overlap graph and the dual-basis norms of a spanning
//    subset;
//  * the linear bounds for symmetric-POVM input sets;
//  * the two-basis (Hofmann) bounds and the classical fidelities they use.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <vector>

#include "fidbound/certificate.hpp"
#include "fidbound/channels.hpp"
#include "fidbound/state_sets.hpp"

namespace fidbound {

// All-pairs minimum path weights with one optimal path per pair.
class PathWeights {
public:
  explicit PathWeights(int n)
      : n_(n), weights_(RMatrix::Constant(n, n, std::numeric_limits<double>::infinity())),
        predecessor_(static_cast<std::size_t>(n) * n, -1) {}

  int size() const noexcept { return n_; }
  double operator()(int a, int b) const { return weights_(a, b); }
  const RMatrix &matrix() const noexcept { return weights_; }
  bool reachable(int a, int b) const { return std::isfinite(weights_(a, b)); }

  // Vertex sequence a -> ... -> b, empty when unreachable.
  std::vector<int> path(int a, int b) const {
    if (!reachable(a, b)) return {};
    std::vector<int> out{b};
    for (int v = b; v != a;) {
      v = predecessor_[static_cast<std::size_t>(a) * n_ + v];
      out.push_back(v);
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

  // Edge weight as a function of (i, j, |M_ij|).
  using EdgeWeight = std::function<double(int, int, double)>;

  static PathWeights compute(const OverlapGraph &graph, const EdgeWeight &weight) {
    const int n = graph.vertex_count();
    PathWeights pw(n);
    using Item = std::pair<double, int>;
    for (int src = 0; src < n; ++src) {
      std::vector<double> dist(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
      std::vector<bool> done(static_cast<std::size_t>(n), false);
      std::priority_queue<Item, std::vector<Item>, std::greater<>> heap; // ties: lowest index
      dist[static_cast<std::size_t>(src)] = 0.0;
      heap.emplace(0.0, src);
      while (!heap.empty()) {
        const auto [du, u] = heap.top();
        heap.pop();
        if (done[static_cast<std::size_t>(u)]) continue;
        done[static_cast<std::size_t>(u)] = true;
        for (const auto &e : graph.neighbors(u)) {
          const double nd = du + weight(u, e.to, e.weight);
          if (nd < dist[static_cast<std::size_t>(e.to)]) {
            dist[static_cast<std::size_t>(e.to)] = nd;
            pw.predecessor_[static_cast<std::size_t>(src) * n + e.to] = u;
            heap.emplace(nd, e.to);
          }
        }
      }
      for (int v = 0; v < n; ++v) pw.weights_(src, v) = dist[static_cast<std::size_t>(v)];
    }
    return pw;
  }

private:
  int n_;
  RMatrix weights_;
  std::vector<int> predecessor_;
};

// W_{kk'} = min over paths of sum |M_ij|^{-1/2}.
inline PathWeights min_weight_paths(const OverlapGraph &graph) {
  return PathWeights::compute(graph, [](int, int, double overlap) { return 1.0 / std::sqrt(overlap); });
}

inline PathWeights min_weight_paths(const OverlapGraph &graph, const GramMatrix &gram_matrix) {
  if (graph.vertex_count() != gram_matrix.size())
    throw ShapeError("min_weight_paths: graph and Gram matrix sizes differ");
  return min_weight_paths(graph);
}

// How the d spanning states entering the dual-basis term are chosen.
struct SpanningSelection {
  enum class Mode {
    greedy_volume,  // column-pivoted QR on the state matrix
    random_subsets, // best of `trials` random spanning subsets (and the greedy one)
    explicit_subset // use `subset` as given
  };
  Mode mode = Mode::greedy_volume;
  int trials = 32;
  std::uint64_t seed = 0;
  std::vector<int> subset;

  static SpanningSelection greedy() { return {}; }
  static SpanningSelection random(int trials, std::uint64_t seed) {
    return {Mode::random_subsets, trials, seed, {}};
  }
  static SpanningSelection fixed(std::vector<int> subset) {
    return {Mode::explicit_subset, 0, 0, std::move(subset)};
  }
};

inline constexpr double max_gram_condition = 1e12;

struct SqrtEpsCoefficient {
  double C = 0.0;
  std::vector<int> subset;    // indices into the full set, sorted
  double path_sum = 0.0;      // sum_{k > k'} W_{kk'}^2 over the subset
  double dual_norm_sum = 0.0; // sum_k sqrt((M^{-1})_kk)
  RVector dual_norms;         // sqrt((M^{-1})_kk), in subset order
};

namespace detail {

inline std::vector<int> greedy_spanning_subset(const StateSet &set) {
  Eigen::ColPivHouseholderQR<CMatrix> qr(set.columns());
  std::vector<int> idx;
  for (int i = 0; i < set.dim() && i < set.size(); ++i) idx.push_back(qr.colsPermutation().indices()(i));
  std::sort(idx.begin(), idx.end());
  return idx;
}

// sqrt((M^{-1})_kk) for the Gram matrix of the given subset.
inline RVector dual_basis_norms(const StateSet &set, const std::vector<int> &subset) {
  if (static_cast<int>(subset.size()) != set.dim())
    throw ValidationError("spanning subset must contain exactly d states");
  const CMatrix m = gram(set.subset(subset)).entries();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > max_gram_condition)
    throw ConditioningError("Gram matrix of the spanning subset is numerically singular (smallest singular value " +
                                format_double(std::max(lo, 0.0), 6) + ")",
                            std::max(lo, 0.0));
  Eigen::LLT<CMatrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw ConditioningError("Gram matrix factorization failed", std::max(lo, 0.0));
  const CMatrix inv = llt.solve(CMatrix::Identity(m.rows(), m.cols()));
  RVector out(m.rows());
  for (Eigen::Index k = 0; k < m.rows(); ++k) out(k) = std::sqrt(std::max(0.0, inv(k, k).real()));
  return out;
}

inline void require_identifying(const StateSet &set, const char *who) {
  const auto id = identifies_unitaries(set);
  if (!id.identifies) throw InapplicableError(std::string(who) + ": set does not identify unitaries: " + id.reason);
}

inline void require_eps_range(std::span<const double> eps, std::size_t n, const char *who) {
  if (eps.size() != n)
    throw ValidationError(std::string(who) + ": expected " + std::to_string(n) + " error values, got " +
                          std::to_string(eps.size()));
  for (double e : eps)
    if (!(e >= 0.0 && e <= 1.0)) throw ValidationError(std::string(who) + ": error values must lie in [0, 1]");
}

// Infidelity coefficient of `subset`: C for scalar eps (eps empty), or the
// full leading-order deficit for state-dependent eps.
inline double subset_deficit(const StateSet &set, const std::vector<int> &subset, const PathWeights &paths,
                             std::span<const double> eps, SqrtEpsCoefficient *detail_out) {
  const double d = set.dim();
  const RVector dual = dual_basis_norms(set, subset);
  double path_sum = 0.0;
  for (std::size_t a = 0; a < subset.size(); ++a)
    for (std::size_t b = 0; b < a; ++b) {
      const double w = paths(subset[a], subset[b]);
      path_sum += w * w;
    }
  double dual_sum = 0.0;
  for (Eigen::Index k = 0; k < dual.size(); ++k)
    dual_sum += eps.empty() ? dual(k) : dual(k) * std::sqrt(eps[static_cast<std::size_t>(subset[static_cast<std::size_t>(k)])]);
  if (detail_out) {
    detail_out->subset = subset;
    detail_out->path_sum = path_sum;
    detail_out->dual_norm_sum = eps.empty() ? dual_sum : dual.sum();
    detail_out->dual_norms = dual;
  }
  if (eps.empty()) return (2.0 / d) * ((2.0 / d) * path_sum + dual_sum);
  // path_sum already carries the eps-weighted edges: (sum sqrt((sqrt e_i + sqrt e_j)/|M_ij|))^2
  return (2.0 / (d * d)) * path_sum + (2.0 / d) * dual_sum;
}

inline std::vector<std::vector<int>> candidate_subsets(const StateSet &set, const SpanningSelection &sel) {
  const int d = set.dim();
  const int n = set.size();
  std::vector<std::vector<int>> out;
  if (sel.mode == SpanningSelection::Mode::explicit_subset) {
    std::vector<int> s = sel.subset;
    for (int k : s)
      if (k < 0 || k >= n) throw ValidationError("spanning subset index out of range");
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end())
      throw ValidationError("spanning subset has repeated indices");
    out.push_back(std::move(s));
    return out;
  }
  out.push_back(greedy_spanning_subset(set));
  if (sel.mode == SpanningSelection::Mode::random_subsets && n > d) {
    std::mt19937_64 rng(sel.seed);
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    for (int t = 0; t < sel.trials; ++t) {
      std::shuffle(all.begin(), all.end(), rng);
      std::vector<int> s(all.begin(), all.begin() + d);
      std::sort(s.begin(), s.end());
      if (is_spanning(set.subset(s))) out.push_back(std::move(s));
    }
  }
  return out;
}

template <class Eval>
inline double best_over_subsets(const StateSet &set, const SpanningSelection &sel, Eval eval,
                                SqrtEpsCoefficient *best_detail) {
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  std::optional<ConditioningError> first_error;
  for (const auto &s : candidate_subsets(set, sel)) {
    SqrtEpsCoefficient detail;
    try {
      const double v = eval(s, &detail);
      if (!any || v < best) {
        best = v;
        if (best_detail) *best_detail = detail;
      }
      any = true;
    } catch (const ConditioningError &e) {
      if (!first_error) first_error = e;
    }
  }
  if (!any) throw *first_error;
  return best;
}

} // namespace detail

// Coefficient C of the sqrt(eps) lower bound F >= 1 - C sqrt(eps) + O(eps),
// eps = max_k eps_k. Paths may pass through every state of the set; the
// dual-basis term uses the d states picked by `selection`.
inline SqrtEpsCoefficient sqrt_eps_coefficient(const StateSet &set,
                                               const SpanningSelection &selection = SpanningSelection::greedy()) {
  detail::require_identifying(set, "sqrt_eps_coefficient");
  const PathWeights paths = min_weight_paths(overlap_graph(set));
  SqrtEpsCoefficient out;
  out.C = detail::best_over_subsets(
      set, selection,
      [&](const std::vector<int> &s, SqrtEpsCoefficient *d) { return detail::subset_deficit(set, s, paths, {}, d); },
      &out);
  return out;
}

// Leading-order lower bound for constant eps: 1 - C sqrt(eps).
inline BoundCertificate lower_bound_small_eps(const StateSet &set, double eps,
                                              const SpanningSelection &selection = SpanningSelection::greedy()) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw ValidationError("lower_bound_small_eps: eps must lie in [0, 1]");
  const auto coef = sqrt_eps_coefficient(set, selection);
  BoundCertificate cert;
  cert.method = BoundMethod::sqrt_eps;
  cert.lower = 1.0 - coef.C * std::sqrt(eps);
  const std::vector<double> ev(static_cast<std::size_t>(set.size()), eps);
  cert.inputs_digest = inputs_digest(set, ev);
  cert.asymptotic = true;
  cert.metadata["validity"] = "asymptotic: valid to leading order in sqrt(eps)";
  cert.metadata["C"] = format_double(coef.C);
  std::string subset;
  for (int k : coef.subset) subset += (subset.empty() ? "" : ",") + std::to_string(k);
  cert.metadata["spanning_subset"] = subset;
  return cert;
}

// State-dependent errors: the squared path weight uses edge terms
// sqrt((sqrt e_i + sqrt e_j) / |M_ij|) and the dual-basis term is weighted by
// sqrt(e_k).
inline BoundCertificate lower_bound_small_eps(const StateSet &set, std::span<const double> eps,
                                              const SpanningSelection &selection = SpanningSelection::greedy()) {
  detail::require_eps_range(eps, static_cast<std::size_t>(set.size()), "lower_bound_small_eps");
  detail::require_identifying(set, "lower_bound_small_eps");
  std::vector<double> root(eps.size());
  for (std::size_t k = 0; k < eps.size(); ++k) root[k] = std::sqrt(eps[k]);
  const PathWeights paths = PathWeights::compute(overlap_graph(set), [&](int i, int j, double overlap) {
    return std::sqrt((root[static_cast<std::size_t>(i)] + root[static_cast<std::size_t>(j)]) / overlap);
  });
  SqrtEpsCoefficient detail;
  const double deficit = detail::best_over_subsets(
      set, selection,
      [&](const std::vector<int> &s, SqrtEpsCoefficient *d) { return detail::subset_deficit(set, s, paths, eps, d); },
      &detail);
  BoundCertificate cert;
  cert.method = BoundMethod::sqrt_eps;
  cert.lower = 1.0 - deficit;
  cert.inputs_digest = inputs_digest(set, eps);
  cert.asymptotic = true;
  cert.metadata["validity"] = "asymptotic: valid to leading order in sqrt(eps)";
  std::string subset;
  for (int k : detail.subset) subset += (subset.empty() ? "" : ",") + std::to_string(k);
  cert.metadata["spanning_subset"] = subset;
  return cert;
}

// 1 - mean(u) >= F >= 1 - ((N-1)/(N-d)) mean(eps) for symmetric-POVM sets with N > d.
inline BoundCertificate symmetric_povm_bounds(const StateSet &set, std::span<const double> eps,
                                              std::optional<std::span<const double>> u = std::nullopt) {
  const int d = set.dim();
  const int n = set.size();
  if (n <= d) throw InapplicableError("symmetric_povm_bounds: requires N > d (N = " + std::to_string(n) + ")");
  const auto povm = is_symmetric_povm(set);
  if (!povm.symmetric) throw InapplicableError("symmetric_povm_bounds: set is not a symmetric POVM");
  detail::require_eps_range(eps, static_cast<std::size_t>(n), "symmetric_povm_bounds");
  BoundCertificate cert;
  cert.method = BoundMethod::symmetric_povm;
  const double mean_eps = std::accumulate(eps.begin(), eps.end(), 0.0) / n;
  cert.lower = 1.0 - (static_cast<double>(n - 1) / (n - d)) * mean_eps;
  if (u) {
    detail::require_eps_range(*u, static_cast<std::size_t>(n), "symmetric_povm_bounds (u)");
    for (int k = 0; k < n; ++k)
      if ((*u)[static_cast<std::size_t>(k)] > eps[static_cast<std::size_t>(k)])
        throw ValidationError("symmetric_povm_bounds: u_k must not exceed eps_k");
    cert.upper = 1.0 - std::accumulate(u->begin(), u->end(), 0.0) / n;
    cert.inputs_digest = inputs_digest(set, eps, *u);
  } else {
    cert.inputs_digest = inputs_digest(set, eps);
  }
  cert.metadata["c"] = format_double(povm.measured_c);
  return cert;
}

// F1 + F2 - 1 <= F <= min(F1, F2) from classical fidelities of two MUBs.
inline BoundCertificate hofmann_bounds(double f1, double f2) {
  if (!(f1 >= 0.0 && f1 <= 1.0 && f2 >= 0.0 && f2 <= 1.0))
    throw ValidationError("hofmann_bounds: classical fidelities must lie in [0, 1]");
  BoundCertificate cert;
  cert.method = BoundMethod::hofmann;
  cert.lower = f1 + f2 - 1.0;
  cert.upper = std::min(f1, f2);
  Fnv1a h;
  h.add(f1);
  h.add(f2);
  cert.inputs_digest = h.hex();
  return cert;
}

inline bool is_orthonormal_basis(const StateSet &basis, double tol = 1e-9) {
  if (basis.size() != basis.dim()) return false;
  return max_abs(gram(basis).entries() - CMatrix::Identity(basis.size(), basis.size())) <= tol;
}

// (1/d) sum_x <b_x|E(b_x-hat)|b_x> over an orthonormal basis.
inline double classical_fidelity(const KrausChannel &channel, const StateSet &basis) {
  if (basis.dim() != channel.dim()) throw ShapeError("classical_fidelity: dimension mismatch");
  if (!is_orthonormal_basis(basis)) throw ValidationError("classical_fidelity: states are not an orthonormal basis");
  double s = 0.0;
  for (const auto &b : basis.states()) s += state_fidelity(channel, b);
  return s / basis.size();
}

// |{(y1..y4) in {0..d-1}^4 : y1 - y2 + y3 - y4 = 0}| = d^2 + (d-1) d (2d-1) / 3
inline long long zero_alternating_sum_count(int d) {
  const long long n = d;
  return n * n + (n - 1) * n * (2 * n - 1) / 3;
}

struct ClassicalFidelityPair {
  double computational = 0.0; // F1
  double fourier = 0.0;       // F2
};

// Closed-form classical fidelities of the simplex fidelity-minimizing channel
// on the computational and Fourier bases.
inline ClassicalFidelityPair min_channel_classical_fidelities(int d, double eps) {
  const double dd = d;
  const double f2_coeff =
      dd * dd / (dd - 1.0) - static_cast<double>(zero_alternating_sum_count(d)) / (dd * (dd - 1.0));
  return {1.0 - dd * eps, 1.0 - f2_coeff * eps};
}

} // namespace fidbound
