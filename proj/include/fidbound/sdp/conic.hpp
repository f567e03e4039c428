#pragma once

// Dense primal-dual interior-point solver for complex Hermitian SDPs with an
// additional nonnegative-orthant block:
//
//   minimize    Re Tr(C X) + c_lp . x
//   subject to  Re Tr(A_i X) + a_lp_i . x = b_i,   X >= 0 (Hermitian), x >= 0
//
// Infeasible-start path following with the HKM search direction and a
// Mehrotra predictor-corrector step. Constraint matrices are given as a
// sparse part plus a sum of weighted rank-one terms, which keeps the Schur
// complement assembly cheap for the fidelity problems (sparse partial-trace
// rows, rank-one state constraints and objective).
//
// The iteration is templated on the real scalar. Problems whose optimal dual
// multipliers are large need more than double precision in the normal
// equations; BasicConicSolver<long double> covers those.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fidbound/core.hpp"

namespace fidbound::sdp {

// Hermitian matrix A = sum(entries) + sum_r w_r v_r v_r^dagger. Sparse entries
// list both triangles explicitly.
struct HermitianTerm {
  struct Entry {
    int row;
    int col;
    cplx value;
  };
  struct RankOne {
    double weight;
    CVector vector;
  };
  std::vector<Entry> entries;
  std::vector<RankOne> rank_one;

  // Re Tr(A Y) for any square Y.
  double apply(const CMatrix &y) const {
    cplx s = 0.0;
    for (const auto &e : entries) s += e.value * y(e.col, e.row);
    for (const auto &r : rank_one) s += r.weight * r.vector.dot(y * r.vector);
    return s.real();
  }

  void add_to(CMatrix &out, double scale) const {
    for (const auto &e : entries) out(e.row, e.col) += scale * e.value;
    for (const auto &r : rank_one) out.noalias() += (scale * r.weight) * (r.vector * r.vector.adjoint());
  }

  CMatrix dense(int n) const {
    CMatrix out = CMatrix::Zero(n, n);
    add_to(out, 1.0);
    return out;
  }

  static HermitianTerm outer(const CVector &v, double weight = 1.0) {
    HermitianTerm t;
    t.rank_one.push_back({weight, v});
    return t;
  }
};

enum class Status { optimal, infeasible, unbounded, max_iterations, numerical_failure };

inline std::string_view status_name(Status s) {
  switch (s) {
  case Status::optimal: return "optimal";
  case Status::infeasible: return "infeasible";
  case Status::unbounded: return "unbounded";
  case Status::max_iterations: return "max-iterations";
  case Status::numerical_failure: return "numerical-failure";
  }
  return "unknown";
}

struct ConicProblem {
  int n = 0;  // Hermitian block dimension
  int lp = 0; // orthant dimension
  HermitianTerm c;
  RVector c_lp;
  std::vector<HermitianTerm> a;
  RMatrix a_lp; // m x lp
  RVector b;

  int constraints() const { return static_cast<int>(a.size()); }
};

struct ConicSettings {
  double tol = 1e-7;
  int max_iter = 100;
  double infeasibility_tol = 1e-8;
  double rank_tol = 1e-10;    // relative, for redundant-equality removal
  std::FILE *trace = nullptr; // per-iteration log when set
};

struct ConicResult {
  Status status = Status::numerical_failure;
  CMatrix X;
  RVector x;
  RVector y; // multipliers scattered back to the original rows (0 for dropped rows)
  CMatrix Z;
  RVector z;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0; // ||b - A(X)|| / (1 + ||b||)
  double dual_residual = 0.0;   // ||C - Z - A^*(y)|| / (1 + ||C||)
  double duality_gap = 0.0;     // max(<X,Z>, |pobj - dobj|) / (1 + |pobj| + |dobj|)
  int iterations = 0;
  int dropped_constraints = 0;
};

namespace detail {

template <class Real> struct Types {
  using Complex = std::complex<Real>;
  using Mat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
  using RMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
  using RVec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
};

template <class Mat> Mat herm(const Mat &m) { return (m + m.adjoint()) / typename Mat::RealScalar(2); }

// Step to the boundary of the PSD cone along d from the interior point with
// Cholesky factor l: largest alpha with x + alpha d >= 0 (infinity if none).
template <class Mat> typename Mat::RealScalar max_psd_step(const Mat &l, const Mat &d) {
  using Real = typename Mat::RealScalar;
  const Mat li_d = l.template triangularView<Eigen::Lower>().solve(d);
  Mat s = l.template triangularView<Eigen::Lower>().solve(Mat(li_d.adjoint()));
  s = herm(s);
  Eigen::SelfAdjointEigenSolver<Mat> es(s, Eigen::EigenvaluesOnly);
  const Real lo = es.eigenvalues().minCoeff();
  return lo < 0 ? Real(-1) / lo : std::numeric_limits<Real>::infinity();
}

template <class RVec> typename RVec::Scalar max_lp_step(const RVec &x, const RVec &d) {
  using Real = typename RVec::Scalar;
  Real a = std::numeric_limits<Real>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (d(i) < 0) a = std::min(a, -x(i) / d(i));
  return a;
}

template <class Mat> typename Mat::RealScalar frob_inner(const Mat &a, const Mat &b) {
  return (a.array().conjugate() * b.array()).sum().real();
}

// Indices of a maximal linearly independent subset of the constraint rows;
// `consistent` is false when a dependent row has an incompatible b.
inline std::vector<int> independent_rows(const ConicProblem &p, double rank_tol, bool &consistent) {
  const int m = p.constraints();
  const Eigen::Index coords = 2 * static_cast<Eigen::Index>(p.n) * p.n + p.lp;
  RMatrix cols(coords, m);
  for (int i = 0; i < m; ++i) {
    const CMatrix dense = p.a[static_cast<std::size_t>(i)].dense(p.n);
    Eigen::Index r = 0;
    for (Eigen::Index k = 0; k < dense.size(); ++k) {
      cols(r++, i) = dense.data()[k].real();
      cols(r++, i) = dense.data()[k].imag();
    }
    for (int l = 0; l < p.lp; ++l) cols(r++, i) = p.a_lp(i, l);
  }
  Eigen::ColPivHouseholderQR<RMatrix> qr(cols);
  qr.setThreshold(rank_tol);
  const Eigen::Index rank = qr.rank();
  std::vector<int> keep;
  for (Eigen::Index i = 0; i < rank; ++i) keep.push_back(qr.colsPermutation().indices()(i));
  std::sort(keep.begin(), keep.end());
  consistent = true;
  if (rank < m) {
    RMatrix basis(coords, rank);
    RVector bk(rank);
    for (Eigen::Index i = 0; i < rank; ++i) {
      basis.col(i) = cols.col(keep[static_cast<std::size_t>(i)]);
      bk(i) = p.b(keep[static_cast<std::size_t>(i)]);
    }
    const auto ls = basis.colPivHouseholderQr();
    for (int j = 0; j < m; ++j) {
      if (std::binary_search(keep.begin(), keep.end(), j)) continue;
      const RVector coef = ls.solve(RVector(cols.col(j)));
      if (std::abs(coef.dot(bk) - p.b(j)) > 1e-9 * (1.0 + std::abs(p.b(j)))) consistent = false;
    }
  }
  return keep;
}

// Constraint data converted to the working precision.
template <class Real> struct WorkingTerm {
  using T = Types<Real>;
  struct Entry {
    int row;
    int col;
    typename T::Complex value;
  };
  struct RankOne {
    Real weight;
    typename T::Vec vector;
  };
  std::vector<Entry> entries;
  std::vector<RankOne> rank_one;

  explicit WorkingTerm(const HermitianTerm &t) {
    for (const auto &e : t.entries)
      entries.push_back({e.row, e.col, typename T::Complex(Real(e.value.real()), Real(e.value.imag()))});
    for (const auto &r : t.rank_one) rank_one.push_back({Real(r.weight), r.vector.template cast<typename T::Complex>()});
  }

  Real apply(const typename T::Mat &y) const {
    typename T::Complex s = 0;
    for (const auto &e : entries) s += e.value * y(e.col, e.row);
    for (const auto &r : rank_one) s += r.weight * r.vector.dot(y * r.vector);
    return s.real();
  }

  void add_to(typename T::Mat &out, Real scale) const {
    for (const auto &e : entries) out(e.row, e.col) += scale * e.value;
    for (const auto &r : rank_one) out.noalias() += (scale * r.weight) * (r.vector * r.vector.adjoint());
  }
};

} // namespace detail

template <class Real> class BasicConicSolver {
  using T = detail::Types<Real>;
  using Complex = typename T::Complex;
  using Mat = typename T::Mat;
  using Vec = typename T::Vec;
  using RMat = typename T::RMat;
  using RVec = typename T::RVec;
  using Term = detail::WorkingTerm<Real>;

  struct Working {
    int n = 0;
    int lp = 0;
    int m = 0;
    Term c;
    RVec c_lp;
    std::vector<Term> a;
    RMat a_lp;
    RVec b;
  };

public:
  explicit BasicConicSolver(ConicSettings settings = {}) : settings_(settings) {}

  // `start`, when given, supplies an interior starting iterate (typically the
  // best iterate of a lower-precision run on the same problem).
  ConicResult solve(const ConicProblem &full, const ConicResult *start = nullptr) const {
    bool consistent = true;
    const std::vector<int> keep = detail::independent_rows(full, settings_.rank_tol, consistent);
    Working w{full.n, full.lp, static_cast<int>(keep.size()), Term(full.c), {}, {}, {}, {}};
    w.c_lp = full.c_lp.size() ? RVec(full.c_lp.cast<Real>()) : RVec(RVec::Zero(full.lp));
    w.a_lp = RMat::Zero(w.m, full.lp);
    w.b.resize(w.m);
    for (std::size_t i = 0; i < keep.size(); ++i) {
      w.a.emplace_back(full.a[static_cast<std::size_t>(keep[i])]);
      if (full.lp) w.a_lp.row(static_cast<Eigen::Index>(i)) = full.a_lp.row(keep[i]).cast<Real>();
      w.b(static_cast<Eigen::Index>(i)) = Real(full.b(keep[i]));
    }
    std::optional<Iterate> init;
    if (start && start->X.rows() == full.n && start->y.size() == full.constraints()) {
      Iterate it;
      it.X = start->X.template cast<Complex>();
      it.Z = start->Z.template cast<Complex>();
      it.x = start->x.template cast<Real>();
      it.z = start->z.template cast<Real>();
      it.y.resize(w.m);
      for (std::size_t i = 0; i < keep.size(); ++i) it.y(static_cast<Eigen::Index>(i)) = Real(start->y(keep[i]));
      init = std::move(it);
    }
    ConicResult r = run(w, init ? &*init : nullptr);
    r.dropped_constraints = full.constraints() - static_cast<int>(keep.size());
    RVector y_full = RVector::Zero(full.constraints());
    for (std::size_t i = 0; i < keep.size(); ++i) y_full(keep[i]) = r.y(static_cast<Eigen::Index>(i));
    r.y = std::move(y_full);
    if (!consistent) r.status = Status::infeasible;
    return r;
  }

private:
  ConicSettings settings_;

  struct Iterate {
    Mat X, Z;
    RVec x, y, z;
  };

  static RVec apply_all(const Working &p, const Mat &Y, const RVec &ylp) {
    RVec out(p.m);
    for (int i = 0; i < p.m; ++i) out(i) = p.a[static_cast<std::size_t>(i)].apply(Y);
    if (p.lp) out += p.a_lp * ylp;
    return out;
  }

  static Mat adjoint_apply(const Working &p, const RVec &y) {
    Mat out = Mat::Zero(p.n, p.n);
    for (int i = 0; i < p.m; ++i) p.a[static_cast<std::size_t>(i)].add_to(out, y(i));
    return detail::herm(out);
  }

  static RVec adjoint_apply_lp(const Working &p, const RVec &y) {
    if (!p.lp) return RVec();
    return p.a_lp.transpose() * y;
  }

  // M_ij = Re Tr(A_i X A_j Z^{-1}) + sum_l a_il a_jl x_l / z_l
  static RMat schur(const Working &p, const Mat &X, const Mat &Zinv, const RVec &x, const RVec &z) {
    const int m = p.m;
    std::vector<std::vector<std::pair<Vec, Vec>>> r1(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
      for (const auto &t : p.a[static_cast<std::size_t>(i)].rank_one)
        r1[static_cast<std::size_t>(i)].emplace_back(X * t.vector, Zinv * t.vector);
    RMat M = RMat::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      const auto &ai = p.a[static_cast<std::size_t>(i)];
      for (int j = i; j < m; ++j) {
        const auto &aj = p.a[static_cast<std::size_t>(j)];
        Complex s = 0;
        for (const auto &ei : ai.entries)
          for (const auto &ej : aj.entries) s += ei.value * X(ei.col, ej.row) * ej.value * Zinv(ej.col, ei.row);
        for (std::size_t t = 0; t < aj.rank_one.size(); ++t) {
          const auto &[pv, qv] = r1[static_cast<std::size_t>(j)][t];
          Complex acc = 0;
          for (const auto &ei : ai.entries) acc += std::conj(qv(ei.row)) * ei.value * pv(ei.col);
          s += aj.rank_one[t].weight * acc;
        }
        for (std::size_t t = 0; t < ai.rank_one.size(); ++t) {
          const auto &[pu, qu] = r1[static_cast<std::size_t>(i)][t];
          Complex acc = 0;
          for (const auto &ej : aj.entries) acc += std::conj(pu(ej.row)) * ej.value * qu(ej.col);
          s += ai.rank_one[t].weight * acc;
          for (std::size_t t2 = 0; t2 < aj.rank_one.size(); ++t2) {
            const Vec &v = aj.rank_one[t2].vector;
            const Vec &u = ai.rank_one[t].vector;
            s += ai.rank_one[t].weight * aj.rank_one[t2].weight * u.dot(r1[static_cast<std::size_t>(j)][t2].first) *
                 v.dot(qu);
          }
        }
        M(i, j) = s.real();
      }
    }
    M.template triangularView<Eigen::StrictlyLower>() = M.transpose();
    if (p.lp) M += p.a_lp * x.cwiseQuotient(z).asDiagonal() * p.a_lp.transpose();
    return M;
  }

  static double to_d(Real v) { return static_cast<double>(v); }

  ConicResult run(const Working &p, const Iterate *start) const {
    const int n = p.n;
    const int m = p.m;
    const Real nu = Real(n + p.lp);
    Mat C = Mat::Zero(n, n);
    p.c.add_to(C, Real(1));
    C = detail::herm(C);
    const Real norm_b = p.b.norm();
    const Real norm_c = std::sqrt(C.squaredNorm() + p.c_lp.squaredNorm());

    // starting point scaled from the data
    Real max_a = 0, xi = std::max(Real(10), std::sqrt(nu));
    for (int i = 0; i < m; ++i) {
      Mat dense = Mat::Zero(n, n);
      p.a[static_cast<std::size_t>(i)].add_to(dense, Real(1));
      const Real na = std::sqrt(dense.squaredNorm() + (p.lp ? p.a_lp.row(i).squaredNorm() : Real(0)));
      max_a = std::max(max_a, na);
      xi = std::max(xi, nu * (1 + std::abs(p.b(i))) / (1 + na));
    }
    const Real eta = std::max({Real(10), std::sqrt(nu), max_a, norm_c});

    Mat X = xi * Mat::Identity(n, n);
    Mat Z = eta * Mat::Identity(n, n);
    RVec x = RVec::Constant(p.lp, xi);
    RVec z = RVec::Constant(p.lp, eta);
    RVec y = RVec::Zero(m);
    if (start) {
      X = start->X;
      Z = start->Z;
      x = start->x;
      z = start->z;
      y = start->y;
    }

    ConicResult best;
    double best_score = std::numeric_limits<double>::infinity();
    Real gamma = Real(0.9);

    auto snapshot = [&](ConicResult &r) {
      r.X = X.template cast<cplx>();
      r.x = x.template cast<double>();
      r.y = y.template cast<double>();
      r.Z = Z.template cast<cplx>();
      r.z = z.template cast<double>();
    };

    for (int iter = 0; iter <= settings_.max_iter; ++iter) {
      const RVec ax = apply_all(p, X, x);
      const RVec rp = p.b - ax;
      const Mat aty = adjoint_apply(p, y);
      const Mat Rd = C - Z - aty;
      const RVec rd_lp = p.c_lp - z - adjoint_apply_lp(p, y);
      const Real pobj = detail::frob_inner(C, X) + p.c_lp.dot(x);
      const Real dobj = p.b.dot(y);
      const Real xz = detail::frob_inner(X, Z) + x.dot(z);
      const Real mu = xz / nu;

      ConicResult cur;
      cur.primal_objective = to_d(pobj);
      cur.dual_objective = to_d(dobj);
      cur.primal_residual = to_d(rp.norm() / (1 + norm_b));
      cur.dual_residual = to_d(std::sqrt(Rd.squaredNorm() + rd_lp.squaredNorm()) / (1 + norm_c));
      cur.duality_gap =
          to_d(std::max(std::abs(xz), std::abs(pobj - dobj)) / (1 + std::abs(pobj) + std::abs(dobj)));
      cur.iterations = iter;
      if (settings_.trace)
        std::fprintf(settings_.trace, "%3d pobj %+.12e dobj %+.12e rp %.2e rd %.2e gap %.2e mu %.2e\n", iter,
                     cur.primal_objective, cur.dual_objective, cur.primal_residual, cur.dual_residual,
                     cur.duality_gap, to_d(mu));
      const double score = std::max({cur.primal_residual, cur.dual_residual, cur.duality_gap});
      if (score < best_score) {
        best_score = score;
        best = cur;
        snapshot(best);
        best.status = Status::max_iterations;
      }
      if (cur.primal_residual <= settings_.tol && cur.dual_residual <= settings_.tol &&
          cur.duality_gap <= settings_.tol) {
        cur.status = Status::optimal;
        snapshot(cur);
        return cur;
      }
      // infeasibility certificates from diverging iterates
      if (dobj > 0 && to_d((aty + Z).norm() / dobj) < settings_.infeasibility_tol && dobj > 1e6) {
        cur.status = Status::infeasible;
        snapshot(cur);
        return cur;
      }
      if (pobj < 0 && to_d(ax.norm() / (-pobj)) < settings_.infeasibility_tol && -pobj > 1e6) {
        cur.status = Status::unbounded;
        snapshot(cur);
        return cur;
      }
      if (iter == settings_.max_iter) break;

      Eigen::LLT<Mat> zchol(Z);
      Eigen::LLT<Mat> xchol(X);
      if (zchol.info() != Eigen::Success || xchol.info() != Eigen::Success) {
        if (settings_.trace) std::fprintf(settings_.trace, "    cholesky of X or Z failed\n");
        best.status = Status::numerical_failure;
        return best;
      }
      const Mat Zinv = detail::herm(Mat(zchol.solve(Mat::Identity(n, n))));
      const Mat xl = xchol.matrixL();
      const Mat zl = zchol.matrixL();
      const RMat M = schur(p, X, Zinv, x, z);

      Eigen::LLT<RMat> mchol(M);
      Eigen::LDLT<RMat> mldlt;
      const bool use_llt = mchol.info() == Eigen::Success;
      if (!use_llt) mldlt.compute(M);
      auto solve_m = [&](const RVec &rhs) -> RVec {
        if (use_llt) return mchol.solve(rhs);
        return mldlt.solve(rhs);
      };

      const Mat XRdZinv = X * Rd * Zinv;
      const RVec xrd_lp = x.cwiseProduct(rd_lp).cwiseQuotient(z);
      const RVec a_zinv = apply_all(p, Zinv, z.cwiseInverse());
      const RVec base_rhs = p.b + apply_all(p, XRdZinv, xrd_lp);

      struct Direction {
        Mat dX, dZ;
        RVec dx, dz, dy;
      };
      auto direction = [&](Real sigma_mu, const Direction *pred) {
        RVec rhs = base_rhs - sigma_mu * a_zinv;
        Mat corr;
        RVec corr_lp;
        if (pred) {
          corr = pred->dX * pred->dZ * Zinv;
          corr_lp = pred->dx.cwiseProduct(pred->dz).cwiseQuotient(z);
          rhs += apply_all(p, corr, corr_lp);
        }
        Direction dir;
        dir.dy = solve_m(rhs);
        dir.dZ = Rd - adjoint_apply(p, dir.dy);
        dir.dz = rd_lp - adjoint_apply_lp(p, dir.dy);
        Mat dX = sigma_mu * Zinv - X - X * dir.dZ * Zinv;
        RVec dx = sigma_mu * z.cwiseInverse() - x - x.cwiseProduct(dir.dz).cwiseQuotient(z);
        if (pred) {
          dX -= corr;
          dx -= corr_lp;
        }
        dir.dX = detail::herm(dX);
        dir.dx = dx;
        // refinement: enforce A(dX) + A_lp dx = rp to working precision
        for (int pass = 0; pass < 2; ++pass) {
          const RVec r2 = rp - apply_all(p, dir.dX, dir.dx);
          const RVec delta = solve_m(r2);
          const Mat adelta = adjoint_apply(p, delta);
          dir.dy += delta;
          dir.dZ -= adelta;
          dir.dX += detail::herm(Mat(X * adelta * Zinv));
          if (p.lp) {
            const RVec aldelta = adjoint_apply_lp(p, delta);
            dir.dz -= aldelta;
            dir.dx += x.cwiseProduct(aldelta).cwiseQuotient(z);
          }
        }
        return dir;
      };
      auto steps = [&](const Direction &dir, Real g) {
        const Real ap = std::min(detail::max_psd_step(xl, dir.dX), detail::max_lp_step(x, dir.dx));
        const Real ad = std::min(detail::max_psd_step(zl, dir.dZ), detail::max_lp_step(z, dir.dz));
        return std::pair{std::min(Real(1), g * ap), std::min(Real(1), g * ad)};
      };

      const Direction pred = direction(0, nullptr);
      const auto [ap_a, ad_a] = steps(pred, 1);
      const Real mu_aff = (detail::frob_inner(Mat(X + ap_a * pred.dX), Mat(Z + ad_a * pred.dZ)) +
                           (x + ap_a * pred.dx).dot(z + ad_a * pred.dz)) /
                          nu;
      const Real ratio = std::max(Real(0), mu_aff / mu);
      const Real sigma = std::min(Real(1), ratio * ratio * ratio);

      const Direction corr = direction(sigma * mu, &pred);
      const auto [ap, ad] = steps(corr, gamma);
      if (settings_.trace)
        std::fprintf(settings_.trace, "    sigma %.2e ap %.3e ad %.3e llt %d\n", to_d(sigma), to_d(ap), to_d(ad),
                     use_llt ? 1 : 0);
      if (!(ap > Real(1e-14) && ad > Real(1e-14)) || !corr.dX.allFinite() || !corr.dZ.allFinite()) {
        best.status = Status::numerical_failure;
        return best;
      }
      X = detail::herm(Mat(X + ap * corr.dX));
      x += ap * corr.dx;
      y += ad * corr.dy;
      Z = detail::herm(Mat(Z + ad * corr.dZ));
      z += ad * corr.dz;
      gamma = Real(0.9) + Real(0.09) * std::min(ap, ad);
    }
    best.status = Status::max_iterations;
    return best;
  }
};

using ConicSolver = BasicConicSolver<double>;
using ExtendedConicSolver = BasicConicSolver<long double>;

} // namespace fidbound::sdp
