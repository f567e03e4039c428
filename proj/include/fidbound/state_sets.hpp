#pragma once

// Families of pure input states and their structural properties: Gram matrix,
// overlap graph, identifiability, commutant, symmetric-POVM membership and the
// named constructions used throughout the toolkit.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fidbound/choi.hpp"
#include "fidbound/core.hpp"

namespace fidbound {

// An ordered family of N >= 1 unit vectors in C^d.
class StateSet {
public:
  StateSet() = default;

  StateSet(int dim, std::vector<PureState> states, std::vector<std::string> labels = {})
      : dim_(dim), states_(std::move(states)), labels_(std::move(labels)) {
    if (dim_ < 1) throw ValidationError("state set dimension must be >= 1");
    if (states_.empty()) throw ValidationError("state set must contain at least one state");
    for (std::size_t k = 0; k < states_.size(); ++k) {
      if (states_[k].dim() != dim_)
        throw ShapeError("state " + std::to_string(k) + " has dimension " +
                         std::to_string(states_[k].dim()) + ", expected " + std::to_string(dim_));
      if (!(std::abs(states_[k].amplitudes().norm() - 1.0) <= tolerance::state_norm))
        throw ValidationError("state " + std::to_string(k) + " is not normalized");
    }
    if (!labels_.empty() && labels_.size() != states_.size())
      throw ValidationError("label count does not match state count");
  }

  int dim() const noexcept { return dim_; }
  int size() const noexcept { return static_cast<int>(states_.size()); }
  const std::vector<PureState> &states() const noexcept { return states_; }
  const PureState &operator[](int k) const { return states_.at(static_cast<std::size_t>(k)); }
  const std::vector<std::string> &labels() const noexcept { return labels_; }

  // d x N matrix whose columns are the states.
  CMatrix columns() const {
    CMatrix s(dim_, size());
    for (int k = 0; k < size(); ++k) s.col(k) = states_[static_cast<std::size_t>(k)].amplitudes();
    return s;
  }

  StateSet subset(const std::vector<int> &indices) const {
    std::vector<PureState> out;
    std::vector<std::string> labels;
    for (int k : indices) {
      out.push_back((*this)[k]);
      if (!labels_.empty()) labels.push_back(labels_[static_cast<std::size_t>(k)]);
    }
    return StateSet(dim_, std::move(out), std::move(labels));
  }

  // Pairs (k, k') with k < k' whose states coincide up to a global phase.
  std::vector<std::pair<int, int>> duplicates(double tol = 1e-12) const {
    std::vector<std::pair<int, int>> out;
    for (int a = 0; a < size(); ++a)
      for (int b = a + 1; b < size(); ++b)
        if (equal_up_to_phase((*this)[a], (*this)[b], tol)) out.emplace_back(a, b);
    return out;
  }

private:
  int dim_ = 0;
  std::vector<PureState> states_;
  std::vector<std::string> labels_;
};

// M_{kk'} = <psi_k|psi_k'>
class GramMatrix {
public:
  explicit GramMatrix(CMatrix entries) : entries_(std::move(entries)) {}
  const CMatrix &entries() const noexcept { return entries_; }
  int size() const noexcept { return static_cast<int>(entries_.rows()); }
  cplx operator()(int i, int j) const { return entries_(i, j); }

private:
  CMatrix entries_;
};

inline GramMatrix gram(const StateSet &set) {
  const CMatrix s = set.columns();
  CMatrix m = s.adjoint() * s;
  for (int k = 0; k < m.rows(); ++k) m(k, k) = 1.0; // exact unit diagonal
  return GramMatrix(hermitian_part(m));
}

inline constexpr double default_overlap_tolerance = 1e-10;

// Undirected graph on the states, edge iff |<psi_k|psi_k'>| > tol.
class OverlapGraph {
public:
  struct Edge {
    int to;
    double weight; // |M_{kk'}|
  };

  explicit OverlapGraph(int vertices) : adjacency_(static_cast<std::size_t>(vertices)) {}

  int vertex_count() const noexcept { return static_cast<int>(adjacency_.size()); }
  const std::vector<Edge> &neighbors(int k) const { return adjacency_.at(static_cast<std::size_t>(k)); }

  void add_edge(int a, int b, double weight) {
    adjacency_.at(static_cast<std::size_t>(a)).push_back({b, weight});
    adjacency_.at(static_cast<std::size_t>(b)).push_back({a, weight});
  }

  bool has_edge(int a, int b) const {
    for (const auto &e : neighbors(a))
      if (e.to == b) return true;
    return false;
  }

  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> out;
    for (int a = 0; a < vertex_count(); ++a)
      for (const auto &e : neighbors(a))
        if (a < e.to) out.emplace_back(a, e.to);
    return out;
  }

  // Components as sorted vertex lists, ordered by smallest member.
  std::vector<std::vector<int>> components() const {
    std::vector<int> label(static_cast<std::size_t>(vertex_count()), -1);
    std::vector<std::vector<int>> out;
    for (int s = 0; s < vertex_count(); ++s) {
      if (label[static_cast<std::size_t>(s)] >= 0) continue;
      std::vector<int> comp;
      std::queue<int> q;
      q.push(s);
      label[static_cast<std::size_t>(s)] = static_cast<int>(out.size());
      while (!q.empty()) {
        const int v = q.front();
        q.pop();
        comp.push_back(v);
        for (const auto &e : neighbors(v))
          if (label[static_cast<std::size_t>(e.to)] < 0) {
            label[static_cast<std::size_t>(e.to)] = static_cast<int>(out.size());
            q.push(e.to);
          }
      }
      std::sort(comp.begin(), comp.end());
      out.push_back(std::move(comp));
    }
    return out;
  }

  bool connected() const { return components().size() == 1; }

private:
  std::vector<std::vector<Edge>> adjacency_;
};

inline OverlapGraph overlap_graph(const GramMatrix &m, double tol = default_overlap_tolerance) {
  OverlapGraph g(m.size());
  for (int a = 0; a < m.size(); ++a)
    for (int b = a + 1; b < m.size(); ++b) {
      const double w = std::abs(m(a, b));
      if (w > tol) g.add_edge(a, b, std::min(w, 1.0));
    }
  return g;
}

inline OverlapGraph overlap_graph(const StateSet &set, double tol = default_overlap_tolerance) {
  return overlap_graph(gram(set), tol);
}

// Number of Gram eigenvalues above tol * (largest eigenvalue).
inline int gram_rank(const StateSet &set, double tol = 1e-8) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(gram(set).entries(), Eigen::EigenvaluesOnly);
  const RVector ev = es.eigenvalues();
  const double cutoff = tol * ev.maxCoeff();
  int rank = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > cutoff) ++rank;
  return rank;
}

inline bool is_spanning(const StateSet &set, double tol = 1e-8) {
  return gram_rank(set, tol) == set.dim();
}

struct IdentifiabilityReport {
  bool identifies = false;
  bool spanning = false;
  bool connected = false;
  int rank = 0;
  std::vector<std::vector<int>> components;
  std::vector<std::pair<int, int>> duplicates;
  std::string reason; // empty when identifying
};

// Spanning + connected overlap graph.
inline IdentifiabilityReport identifies_unitaries(const StateSet &set, double rank_tol = 1e-8,
                                                  double overlap_tol = default_overlap_tolerance) {
  IdentifiabilityReport r;
  r.rank = gram_rank(set, rank_tol);
  r.spanning = r.rank == set.dim();
  r.components = overlap_graph(set, overlap_tol).components();
  r.connected = r.components.size() == 1;
  r.duplicates = set.duplicates();
  r.identifies = r.spanning && r.connected;
  if (!r.spanning && !r.connected)
    r.reason = "states do not span (rank " + std::to_string(r.rank) + " < " +
               std::to_string(set.dim()) + ") and graph disconnected";
  else if (!r.spanning)
    r.reason = "states do not span (rank " + std::to_string(r.rank) + " < " +
               std::to_string(set.dim()) + ")";
  else if (!r.connected)
    r.reason = "graph disconnected (" + std::to_string(r.components.size()) + " components)";
  return r;
}

// Dimension of {X in M_d(C) : [X, psi-hat_k] = 0 for all k}, from the null
// space of the stacked commutator map.
inline int commutant_dimension(const StateSet &set, double tol = 1e-9) {
  const int d = set.dim();
  const int n = d * d;
  CMatrix stacked(static_cast<Eigen::Index>(set.size()) * n, n);
  for (int k = 0; k < set.size(); ++k) {
    const Operator p = set[k].projector();
    for (int b = 0; b < d; ++b)
      for (int a = 0; a < d; ++a) {
        Operator e = Operator::Zero(d, d);
        e(a, b) = 1.0;
        const Operator c = e * p - p * e;
        stacked.block(static_cast<Eigen::Index>(k) * n, a + b * d, n, 1) =
            Eigen::Map<const CVector>(c.data(), n);
      }
  }
  Eigen::JacobiSVD<CMatrix> svd(stacked);
  const RVector sv = svd.singularValues();
  const double cutoff = tol * std::max(1.0, sv.size() ? sv(0) : 0.0);
  int nullity = n - static_cast<int>(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) <= cutoff) ++nullity;
  return nullity;
}

// (N - d) / (d (N - 1)); NaN for N = 1.
inline double symmetric_povm_overlap(int d, int n) {
  if (n <= 1) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(n - d) / (static_cast<double>(d) * (n - 1));
}

struct SymmetricPovmReport {
  bool symmetric = false;
  double measured_c = 0.0; // mean pairwise |<psi_k|psi_k'>|^2
  double expected_c = 0.0; // (N - d) / (d (N - 1))
  double overlap_spread = 0.0; // max - min of the pairwise |overlap|^2
  double frame_defect = 0.0;   // max |(d/N) sum psi-hat_k - I|
  bool trivial = false;        // c = 0: orthonormal basis, graph disconnected
};

inline SymmetricPovmReport is_symmetric_povm(const StateSet &set, double tol = 1e-9) {
  SymmetricPovmReport r;
  const int d = set.dim();
  const int n = set.size();
  const CMatrix m = gram(set).entries();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
  int pairs = 0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const double o = std::norm(m(a, b));
      lo = std::min(lo, o);
      hi = std::max(hi, o);
      sum += o;
      ++pairs;
    }
  r.measured_c = pairs ? sum / pairs : 0.0;
  r.overlap_spread = pairs ? hi - lo : 0.0;
  r.expected_c = symmetric_povm_overlap(d, n);
  Operator frame = Operator::Zero(d, d);
  for (const auto &s : set.states()) frame += s.projector();
  frame *= static_cast<double>(d) / n;
  r.frame_defect = max_abs(frame - Operator::Identity(d, d));
  const bool c_matches = n == 1 ? d == 1 : std::abs(r.measured_c - r.expected_c) <= tol;
  r.symmetric = r.overlap_spread <= tol && r.frame_defect <= tol && c_matches;
  r.trivial = r.symmetric && r.measured_c <= tol;
  return r;
}

inline StateSet make_computational_basis(int d) {
  std::vector<PureState> states;
  std::vector<std::string> labels;
  for (int x = 0; x < d; ++x) {
    states.push_back(PureState::basis(d, x));
    labels.push_back("|" + std::to_string(x) + ">");
  }
  return StateSet(d, std::move(states), std::move(labels));
}

// psi_k = (1/sqrt d) sum_x w^{kx} |x>, w = exp(2 pi i / (d + 1)), k = 0..d.
inline StateSet make_simplex(int d) {
  if (d < 2) throw ValidationError("make_simplex: d must be >= 2");
  std::vector<PureState> states;
  std::vector<std::string> labels;
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  for (int k = 0; k <= d; ++k) {
    CVector v(d);
    for (int x = 0; x < d; ++x)
      v(x) = s * std::polar(1.0, 2.0 * std::numbers::pi * ((k * x) % (d + 1)) / (d + 1));
    states.emplace_back(std::move(v));
    labels.push_back("simplex_" + std::to_string(k));
  }
  return StateSet(d, std::move(states), std::move(labels));
}

// f_x = (1/sqrt d) sum_y exp(2 pi i x y / d) |y>
inline StateSet make_fourier_basis(int d) {
  if (d < 2) throw ValidationError("make_fourier_basis: d must be >= 2");
  std::vector<PureState> states;
  std::vector<std::string> labels;
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  for (int x = 0; x < d; ++x) {
    CVector v(d);
    for (int y = 0; y < d; ++y) v(y) = s * std::polar(1.0, 2.0 * std::numbers::pi * ((x * y) % d) / d);
    states.emplace_back(std::move(v));
    labels.push_back("f_" + std::to_string(x));
  }
  return StateSet(d, std::move(states), std::move(labels));
}

// Computational basis followed by (1/sqrt d) sum_x |x>.
inline StateSet make_basis_plus_totally_rotated(int d) {
  if (d < 2) throw ValidationError("make_basis_plus_totally_rotated: d must be >= 2");
  StateSet basis = make_computational_basis(d);
  std::vector<PureState> states = basis.states();
  std::vector<std::string> labels = basis.labels();
  states.emplace_back(CVector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d))));
  labels.push_back("totally_rotated");
  return StateSet(d, std::move(states), std::move(labels));
}

// Single-qubit factors of simplex state k for d = 2^n:
// (|0> + exp(i pi k 2^{n+1-j} / (d+1)) |1>) / sqrt 2, j = 1..n (j = 1 most significant).
inline std::vector<PureState> factor_simplex_state(int n, int k) {
  if (n < 1 || n > 30) throw ValidationError("factor_simplex_state: n out of range");
  const long long d = 1LL << n;
  if (k < 0 || k > d) throw ValidationError("factor_simplex_state: k out of range [0, 2^n]");
  std::vector<PureState> out;
  const double s = 1.0 / std::sqrt(2.0);
  for (int j = 1; j <= n; ++j) {
    // exponents reduced mod 2(d+1) to keep the angle small
    const long long num = (static_cast<long long>(k) * (1LL << (n + 1 - j))) % (2 * (d + 1));
    CVector v(2);
    v(0) = s;
    v(1) = s * std::polar(1.0, std::numbers::pi * static_cast<double>(num) / static_cast<double>(d + 1));
    out.emplace_back(std::move(v));
  }
  return out;
}

struct BipartiteFrame {
  Operator gamma;      // sum_k psi-hat_k^T (x) psi-hat_k
  RVector eigenvalues; // descending
};

inline BipartiteFrame frame_operator_bipartite(const StateSet &set) {
  const int n = set.dim() * set.dim();
  BipartiteFrame f;
  f.gamma = Operator::Zero(n, n);
  for (const auto &s : set.states()) {
    const CVector v = transpose_tensor_vector(s);
    f.gamma.noalias() += v * v.adjoint();
  }
  f.gamma = hermitian_part(f.gamma);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(f.gamma, Eigen::EigenvaluesOnly);
  f.eigenvalues = es.eigenvalues().reverse();
  return f;
}

// Normalized vectors of i.i.d. standard complex Gaussians.
inline PureState haar_random_state(int d, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CVector v(d);
  for (int i = 0; i < d; ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    v(i) = cplx(re, im);
  }
  return PureState::normalized(v);
}

inline StateSet make_haar_random_set(int d, int n, std::uint64_t seed) {
  if (d < 1 || n < 1) throw ValidationError("make_haar_random_set: d and N must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<PureState> states;
  for (int k = 0; k < n; ++k) states.push_back(haar_random_state(d, rng));
  return StateSet(d, std::move(states));
}

// Regular tetrahedron of Bloch vectors: the d = 2 SIC-POVM.
inline StateSet make_qubit_sic() {
  const double third = 1.0 / 3.0;
  const double sx = std::sqrt(2.0) / 3.0;
  const double sy = std::sqrt(2.0 / 3.0);
  const double bloch[4][3] = {{0, 0, 1}, {2 * sx, 0, -third}, {-sx, sy, -third}, {-sx, -sy, -third}};
  std::vector<PureState> states;
  for (const auto &b : bloch) {
    const double theta = std::acos(std::clamp(b[2], -1.0, 1.0));
    const double phi = std::atan2(b[1], b[0]);
    CVector v(2);
    v(0) = std::cos(theta / 2);
    v(1) = std::polar(std::sin(theta / 2), phi);
    states.emplace_back(std::move(v));
  }
  return StateSet(2, std::move(states), {"sic_0", "sic_1", "sic_2", "sic_3"});
}

} // namespace fidbound
