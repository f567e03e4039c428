#pragma once

// Minimum / maximum process fidelity consistent with per-state fidelity
// bounds, computed exactly by semidefinite programming over Choi matrices.

#include <cmath>
#include <future>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "fidbound/certificate.hpp"
#include "fidbound/choi.hpp"
#include "fidbound/sdp/conic.hpp"
#include "fidbound/state_sets.hpp"

namespace fidbound::sdp {

enum class Sense { minimize, maximize };
enum class Bound { at_least, at_most };

struct EqualityConstraint {
  HermitianTerm matrix;
  double rhs = 0.0;
  std::string label;
};

struct InequalityConstraint {
  HermitianTerm matrix;
  double rhs = 0.0;
  Bound bound = Bound::at_least;
  bool implied = false; // holds whenever the equalities and the kernel conditions do
};

// Optimize Re Tr(chi F0) over Hermitian PSD chi of size d^2 subject to
// Re Tr(chi A_i) = b_i and Re Tr(chi G_k) >= h_k (or <= h_k).
struct SdpProblem {
  int choi_dim = 0; // d; the variable is d^2 x d^2
  Sense sense = Sense::minimize;
  HermitianTerm objective;
  std::vector<EqualityConstraint> equalities;
  std::vector<InequalityConstraint> inequalities;
  // Every feasible chi annihilates these vectors. The solver restricts chi to
  // their orthogonal complement, which restores strict feasibility.
  std::vector<CVector> kernel;

  int variable_dim() const { return choi_dim * choi_dim; }
};

// standard: double arithmetic. extended: long double throughout. adaptive:
// double first, continued in long double from the best double iterate when
// the double run stalls short of the tolerance.
enum class Precision { standard, extended, adaptive };

struct SolveSettings {
  double tol = 1e-7;
  Precision precision = Precision::adaptive;
  int max_iter = 100;
  std::FILE *trace = nullptr;
};

struct SdpSolution {
  CMatrix variable; // Hermitian d^2 x d^2, Tr_2 projected onto I/d
  double objective = 0.0;     // Re Tr(variable F0)
  double dual_objective = 0.0;
  Status status = Status::numerical_failure;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double duality_gap = 0.0;
  int iterations = 0;
  int dropped_equalities = 0;
  double min_eigenvalue = 0.0;
  double max_constraint_violation = 0.0; // over equalities and inequalities of the returned variable
  int choi_dim = 0;

  bool optimal() const { return status == Status::optimal; }

  // Validated Choi matrix; PSD checked at the solver tolerance when looser
  // than the default.
  ChoiMatrix choi(double solver_tol = 1e-7) const {
    ChoiTolerances t;
    t.psd = std::max(t.psd, solver_tol);
    return ChoiMatrix(variable, choi_dim, t);
  }
};

namespace detail {

// Tr_2(chi) = I/d as d^2 real-linear conditions, plus the implied trace row.
inline std::vector<EqualityConstraint> partial_trace_equalities(int d) {
  std::vector<EqualityConstraint> out;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      // r_ij = sum_k chi((i,k),(j,k)) = Tr(chi B), B = sum_k |j,k><i,k|
      if (i == j) {
        EqualityConstraint c;
        for (int k = 0; k < d; ++k) c.matrix.entries.push_back({i * d + k, i * d + k, 1.0});
        c.rhs = 1.0 / d;
        c.label = "re Tr2[" + std::to_string(i) + "," + std::to_string(i) + "]";
        out.push_back(std::move(c));
        continue;
      }
      EqualityConstraint re, im;
      for (int k = 0; k < d; ++k) {
        const int a = j * d + k, b = i * d + k;
        // (B + B^dag)/2 and (-iB + iB^dag)/2
        re.matrix.entries.push_back({a, b, 0.5});
        re.matrix.entries.push_back({b, a, 0.5});
        im.matrix.entries.push_back({a, b, cplx(0, -0.5)});
        im.matrix.entries.push_back({b, a, cplx(0, 0.5)});
      }
      re.label = "re Tr2[" + std::to_string(i) + "," + std::to_string(j) + "]";
      im.label = "im Tr2[" + std::to_string(i) + "," + std::to_string(j) + "]";
      out.push_back(std::move(re));
      out.push_back(std::move(im));
    }
  EqualityConstraint tr;
  for (int k = 0; k < d * d; ++k) tr.matrix.entries.push_back({k, k, 1.0});
  tr.rhs = 1.0;
  tr.label = "trace";
  out.push_back(std::move(tr));
  return out;
}

inline void check_eps(const StateSet &set, std::span<const double> eps) {
  if (eps.size() != static_cast<std::size_t>(set.size()))
    throw ValidationError("expected " + std::to_string(set.size()) + " error values, got " +
                          std::to_string(eps.size()));
  for (double e : eps)
    if (!(e >= 0.0 && e <= 1.0)) throw ValidationError("error values must lie in [0, 1]");
}

inline SdpProblem build_fidelity_problem(const StateSet &set, std::span<const double> eps, Sense sense) {
  check_eps(set, eps);
  const int d = set.dim();
  SdpProblem p;
  p.choi_dim = d;
  p.sense = sense;
  p.objective = HermitianTerm::outer(maximally_entangled(d).amplitudes());
  p.equalities = partial_trace_equalities(d);
  for (int k = 0; k < set.size(); ++k) {
    InequalityConstraint c;
    c.matrix = HermitianTerm::outer(transpose_tensor_vector(set[k]));
    c.rhs = (1.0 - eps[static_cast<std::size_t>(k)]) / d;
    c.bound = sense == Sense::minimize ? Bound::at_least : Bound::at_most;
    if (sense == Sense::minimize && eps[static_cast<std::size_t>(k)] == 0.0) {
      // E(psi) = psi forces chi (conj(psi) (x) w) = 0 for every w orthogonal to psi
      const CVector &v = set[k].amplitudes();
      const Eigen::HouseholderQR<CMatrix> qr{CMatrix(v)};
      const CMatrix q = qr.householderQ();
      for (int j = 1; j < d; ++j) p.kernel.push_back(tensor(CVector(v.conjugate()), CVector(q.col(j))));
      c.implied = true;
    }
    p.inequalities.push_back(std::move(c));
  }
  return p;
}

} // namespace detail

// min Tr(chi phi-hat) s.t. CPTP and Tr(chi (psi_k-hat^T (x) psi_k-hat)) >= (1 - eps_k)/d
inline SdpProblem build_fmin_problem(const StateSet &set, std::span<const double> eps) {
  return detail::build_fidelity_problem(set, eps, Sense::minimize);
}

// max Tr(chi phi-hat) s.t. CPTP and Tr(chi (psi_k-hat^T (x) psi_k-hat)) <= (1 - eps_k)/d
inline SdpProblem build_fmax_problem(const StateSet &set, std::span<const double> eps) {
  return detail::build_fidelity_problem(set, eps, Sense::maximize);
}

// Per-constraint slack of a candidate variable: >= 0 when satisfied.
inline std::vector<double> inequality_slacks(const SdpProblem &p, const CMatrix &chi) {
  std::vector<double> out;
  for (const auto &c : p.inequalities) {
    const double v = c.matrix.apply(chi);
    out.push_back(c.bound == Bound::at_least ? v - c.rhs : c.rhs - v);
  }
  return out;
}

namespace detail {

// Orthonormal basis of the complement of span(kernel), as columns.
inline CMatrix face_basis(int n, const std::vector<CVector> &kernel) {
  if (kernel.empty()) return CMatrix::Identity(n, n);
  CMatrix k(n, static_cast<Eigen::Index>(kernel.size()));
  for (std::size_t j = 0; j < kernel.size(); ++j) k.col(static_cast<Eigen::Index>(j)) = kernel[j];
  Eigen::SelfAdjointEigenSolver<CMatrix> es(k * k.adjoint());
  const double cut = 1e-9 * std::max(1.0, es.eigenvalues().maxCoeff());
  int r = 0;
  while (r < n && es.eigenvalues()(r) <= cut) ++r;
  return es.eigenvectors().leftCols(r);
}

// The term seen by Y when chi = V Y V^dag.
inline HermitianTerm restrict_term(const HermitianTerm &t, const CMatrix &v) {
  HermitianTerm out;
  for (const auto &r : t.rank_one) out.rank_one.push_back({r.weight, CVector(v.adjoint() * r.vector)});
  if (!t.entries.empty()) {
    CMatrix e = CMatrix::Zero(v.rows(), v.rows());
    for (const auto &x : t.entries) e(x.row, x.col) += x.value;
    const CMatrix red = v.adjoint() * e * v;
    for (int i = 0; i < red.rows(); ++i)
      for (int j = 0; j < red.cols(); ++j)
        if (red(i, j) != cplx(0.0)) out.entries.push_back({i, j, red(i, j)});
  }
  return out;
}

} // namespace detail

inline SdpSolution solve(const SdpProblem &problem, const SolveSettings &settings = {}) {
  const int n = problem.variable_dim();
  const int d = problem.choi_dim;
  const bool reduced = !problem.kernel.empty();
  const CMatrix face = detail::face_basis(n, problem.kernel);
  const auto restrict = [&](const HermitianTerm &t) { return reduced ? detail::restrict_term(t, face) : t; };
  std::vector<const InequalityConstraint *> active;
  for (const auto &c : problem.inequalities)
    if (!(reduced && c.implied)) active.push_back(&c);
  const int lp = static_cast<int>(active.size());
  if (face.cols() == 0) {
    SdpSolution s;
    s.choi_dim = d;
    s.status = Status::infeasible;
    s.variable = CMatrix::Zero(n, n);
    return s;
  }
  ConicProblem cp;
  cp.n = static_cast<int>(face.cols());
  cp.lp = lp;
  cp.c = restrict(problem.objective);
  if (problem.sense == Sense::maximize) {
    for (auto &e : cp.c.entries) e.value = -e.value;
    for (auto &r : cp.c.rank_one) r.weight = -r.weight;
  }
  cp.c_lp = RVector::Zero(lp);
  const int m = static_cast<int>(problem.equalities.size()) + lp;
  cp.a_lp = RMatrix::Zero(m, lp);
  cp.b.resize(m);
  int row = 0;
  for (const auto &e : problem.equalities) {
    cp.a.push_back(restrict(e.matrix));
    cp.b(row++) = e.rhs;
  }
  for (int k = 0; k < lp; ++k) {
    const auto &c = *active[static_cast<std::size_t>(k)];
    cp.a.push_back(restrict(c.matrix));
    cp.a_lp(row, k) = c.bound == Bound::at_least ? -1.0 : 1.0;
    cp.b(row++) = c.rhs;
  }

  ConicSettings cs;
  cs.tol = settings.tol;
  cs.max_iter = settings.max_iter;
  cs.trace = settings.trace;
  ConicResult r;
  switch (settings.precision) {
  case Precision::standard: r = ConicSolver(cs).solve(cp); break;
  case Precision::extended: r = ExtendedConicSolver(cs).solve(cp); break;
  case Precision::adaptive:
    r = ConicSolver(cs).solve(cp);
    if (r.status == Status::optimal || r.status == Status::infeasible || r.status == Status::unbounded) break;
    {
      const int spent = r.iterations;
      ConicResult cont = ExtendedConicSolver(cs).solve(cp, &r);
      if (cont.status != Status::optimal) cont = ExtendedConicSolver(cs).solve(cp);
      else cont.iterations += spent;
      r = std::move(cont);
    }
    break;
  }

  SdpSolution s;
  s.choi_dim = d;
  s.status = r.status;
  s.primal_residual = r.primal_residual;
  s.dual_residual = r.dual_residual;
  s.duality_gap = r.duality_gap;
  s.iterations = r.iterations;
  s.dropped_equalities = r.dropped_constraints;
  CMatrix chi = reduced ? CMatrix(face * r.X * face.adjoint()) : CMatrix(r.X);
  chi = hermitian_part(chi);
  // Restore Tr_2(chi) = I/d exactly: chi += (I/d - Tr_2 chi) (x) I/d.
  const Operator defect =
      Operator::Identity(d, d) / static_cast<double>(d) - partial_trace(chi, Subsystem::second, d, d);
  chi += tensor(defect, Operator::Identity(d, d) / static_cast<double>(d));
  s.variable = hermitian_part(chi);
  s.objective = problem.objective.apply(s.variable);
  s.dual_objective = problem.sense == Sense::maximize ? -r.dual_objective : r.dual_objective;
  s.min_eigenvalue = min_eigenvalue(s.variable);
  double viol = 0.0;
  for (const auto &e : problem.equalities) viol = std::max(viol, std::abs(e.matrix.apply(s.variable) - e.rhs));
  for (double sl : inequality_slacks(problem, s.variable)) viol = std::max(viol, -sl);
  s.max_constraint_violation = viol;
  return s;
}

inline SdpSolution solve_f_min(const StateSet &set, std::span<const double> eps, const SolveSettings &settings = {}) {
  return solve(build_fmin_problem(set, eps), settings);
}

inline SdpSolution solve_f_max(const StateSet &set, std::span<const double> eps, const SolveSettings &settings = {}) {
  return solve(build_fmax_problem(set, eps), settings);
}

namespace detail {

inline BoundCertificate sdp_certificate(const StateSet &set, std::span<const double> eps, const SdpSolution &s,
                                        BoundMethod method, const SolveSettings &settings) {
  if (!s.optimal())
    throw SolverError(std::string("SDP solve did not converge: status ") + std::string(status_name(s.status)) +
                      ", primal residual " + format_double(s.primal_residual, 3) + ", dual residual " +
                      format_double(s.dual_residual, 3) + ", gap " + format_double(s.duality_gap, 3));
  BoundCertificate cert;
  cert.method = method;
  const double value = clamp_fidelity(s.objective, 1e-6);
  if (method == BoundMethod::sdp_min)
    cert.lower = value;
  else
    cert.upper = value;
  cert.inputs_digest = inputs_digest(set, eps);
  cert.metadata["status"] = std::string(status_name(s.status));
  cert.metadata["tol"] = format_double(settings.tol, 3);
  cert.metadata["iterations"] = std::to_string(s.iterations);
  cert.metadata["primal_residual"] = format_double(s.primal_residual, 3);
  cert.metadata["dual_residual"] = format_double(s.dual_residual, 3);
  cert.metadata["duality_gap"] = format_double(s.duality_gap, 3);
  cert.metadata["dual_objective"] = format_double(s.dual_objective);
  return cert;
}

} // namespace detail

// Throws SolverError unless the solve is optimal.
inline BoundCertificate f_min(const StateSet &set, std::span<const double> eps, const SolveSettings &settings = {}) {
  return detail::sdp_certificate(set, eps, solve_f_min(set, eps, settings), BoundMethod::sdp_min, settings);
}

inline BoundCertificate f_max(const StateSet &set, std::span<const double> eps, const SolveSettings &settings = {}) {
  return detail::sdp_certificate(set, eps, solve_f_max(set, eps, settings), BoundMethod::sdp_max, settings);
}

// Runs fn(i) for i in [0, count) on up to `threads` workers; results keep index order.
template <class Fn>
auto parallel_map(int count, int threads, Fn fn) -> std::vector<decltype(fn(0))> {
  using T = decltype(fn(0));
  std::vector<T> out(static_cast<std::size_t>(count));
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = fn(i);
    return out;
  }
  std::vector<std::future<void>> workers;
  for (int w = 0; w < threads; ++w)
    workers.push_back(std::async(std::launch::async, [&, w] {
      for (int i = w; i < count; i += threads) out[static_cast<std::size_t>(i)] = fn(i);
    }));
  for (auto &f : workers) f.get();
  return out;
}

struct CurvePoint {
  double eps = 0.0;
  double f_min = 0.0;
  Status status = Status::numerical_failure;
  double gap = 0.0;
};

// F_min at constant eps_k = eps for each grid point; failures stay in-row.
inline std::vector<CurvePoint> sweep(const StateSet &set, std::span<const double> eps_grid,
                                     const SolveSettings &settings = {}, int threads = 1) {
  for (std::size_t i = 1; i < eps_grid.size(); ++i)
    if (eps_grid[i] < eps_grid[i - 1]) throw ValidationError("sweep: grid must be sorted ascending");
  return parallel_map(static_cast<int>(eps_grid.size()), threads, [&](int i) {
    const double e = eps_grid[static_cast<std::size_t>(i)];
    const std::vector<double> eps(static_cast<std::size_t>(set.size()), e);
    CurvePoint pt;
    pt.eps = e;
    try {
      const SdpSolution s = solve_f_min(set, eps, settings);
      pt.f_min = s.objective;
      pt.status = s.status;
      pt.gap = s.duality_gap;
    } catch (const Error &) {
      pt.status = Status::numerical_failure;
      pt.f_min = std::nan("");
    }
    return pt;
  });
}

struct SqrtFit {
  double coefficient = 0.0; // a in 1 - F_min(eps) ~ a sqrt(eps)
  std::vector<CurvePoint> points;
};

inline std::vector<double> sqrt_fit_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 10; ++i) g.push_back(1e-5 * i);
  return g;
}

// Least squares through the origin of 1 - F_min(eps) = a sqrt(eps) over
// eps = 1e-5, 2e-5, ..., 1e-4.
inline SqrtFit fit_sqrt_coefficient(const StateSet &set, const SolveSettings &settings = {}, int threads = 1) {
  const std::vector<double> grid = sqrt_fit_grid();
  SqrtFit fit;
  fit.points = sweep(set, grid, settings, threads);
  double num = 0.0, den = 0.0;
  for (const auto &pt : fit.points) {
    if (pt.status != Status::optimal)
      throw SolverError("fit_sqrt_coefficient: solve failed at eps = " + format_double(pt.eps, 3) + " (" +
                        std::string(status_name(pt.status)) + ")");
    num += std::sqrt(pt.eps) * (1.0 - pt.f_min);
    den += pt.eps;
  }
  fit.coefficient = num / den;
  return fit;
}

struct ConvexityRow {
  double t = 0.0;
  double f_min_mix = 0.0;   // F_min(t e1 + (1-t) e2)
  double f_min_chord = 0.0; // t F_min(e1) + (1-t) F_min(e2)
  double f_max_mix = 0.0;
  double f_max_chord = 0.0;
  double convexity_slack() const { return f_min_chord - f_min_mix; }
  double concavity_slack() const { return f_max_mix - f_max_chord; }
};

struct ConvexityReport {
  std::vector<ConvexityRow> rows;
  double min_convexity_slack = 0.0;
  double min_concavity_slack = 0.0;
  bool holds(double tol = 1e-6) const { return min_convexity_slack >= -tol && min_concavity_slack >= -tol; }
};

inline ConvexityReport convexity_probe(const StateSet &set, std::span<const double> eps1, std::span<const double> eps2,
                                       std::span<const double> t_grid, const SolveSettings &settings = {}) {
  detail::check_eps(set, eps1);
  detail::check_eps(set, eps2);
  auto value = [&](std::span<const double> e, bool min) {
    const SdpSolution s = min ? solve_f_min(set, e, settings) : solve_f_max(set, e, settings);
    if (!s.optimal())
      throw SolverError("convexity_probe: solve failed (" + std::string(status_name(s.status)) + ")");
    return s.objective;
  };
  const double min1 = value(eps1, true), min2 = value(eps2, true);
  const double max1 = value(eps1, false), max2 = value(eps2, false);
  ConvexityReport rep;
  rep.min_convexity_slack = rep.min_concavity_slack = std::numeric_limits<double>::infinity();
  for (double t : t_grid) {
    std::vector<double> mix(eps1.size());
    for (std::size_t k = 0; k < mix.size(); ++k) mix[k] = t * eps1[k] + (1.0 - t) * eps2[k];
    ConvexityRow r;
    r.t = t;
    r.f_min_mix = value(mix, true);
    r.f_min_chord = t * min1 + (1.0 - t) * min2;
    r.f_max_mix = value(mix, false);
    r.f_max_chord = t * max1 + (1.0 - t) * max2;
    rep.min_convexity_slack = std::min(rep.min_convexity_slack, r.convexity_slack());
    rep.min_concavity_slack = std::min(rep.min_concavity_slack, r.concavity_slack());
    rep.rows.push_back(r);
  }
  return rep;
}

} // namespace fidbound::sdp
