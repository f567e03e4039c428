#include <random>

#include "test_support.hpp"

using namespace fidbound;
using namespace fidbound::sdp;
using namespace fidbound::testing;

namespace {

std::vector<double> constant(const StateSet &s, double e) { return std::vector<double>(static_cast<std::size_t>(s.size()), e); }

double fmin(const StateSet &s, const std::vector<double> &eps) {
  const SdpSolution sol = solve_f_min(s, eps);
  EXPECT_TRUE(sol.optimal()) << status_name(sol.status);
  return sol.objective;
}

double fmax(const StateSet &s, const std::vector<double> &eps) {
  const SdpSolution sol = solve_f_max(s, eps);
  EXPECT_TRUE(sol.optimal()) << status_name(sol.status);
  return sol.objective;
}

// Re-checks a returned Choi matrix from scratch: PSD, Tr_2 = I/d, per-state
// fidelities against the bound, and the objective.
void expect_witness(const StateSet &s, const std::vector<double> &eps, const SdpSolution &sol, bool upper) {
  const int d = s.dim();
  const CMatrix &chi = sol.variable;
  EXPECT_LT(hermitian_defect(chi), 1e-12);
  EXPECT_GE(min_eigenvalue(chi), -1e-6);
  EXPECT_LT(max_abs_diff(trace_out_second(chi, d, d), CMatrix::Identity(d, d) / static_cast<double>(d)), 1e-8);
  for (int k = 0; k < s.size(); ++k) {
    const CVector v = tensor(CVector(s[k].amplitudes().conjugate()), s[k].amplitudes());
    const double fid = d * (v.adjoint() * chi * v)(0, 0).real();
    const double slack = upper ? (1.0 - eps[static_cast<std::size_t>(k)]) - fid : fid - (1.0 - eps[static_cast<std::size_t>(k)]);
    EXPECT_GE(slack, -1e-6) << "state " << k;
  }
  const CVector phi = maximally_entangled(d).amplitudes();
  EXPECT_NEAR((phi.adjoint() * chi * phi)(0, 0).real(), sol.objective, 1e-7);
  EXPECT_TRUE(inspect_choi(chi, d).passes([] {
    ChoiTolerances t;
    t.psd = 1e-6;
    return t;
  }()));
}

// Gaussian-random orthonormal basis of C^d.
StateSet random_basis(int d, std::mt19937_64 &rng) { return columns_as_set(random_unitary(d, rng)); }

} // namespace

TEST(BuildProblem, CountsAndHermiticity) {
  const StateSet s = make_simplex(2);
  const SdpProblem p = build_fmin_problem(s, constant(s, 0.01));
  EXPECT_EQ(p.variable_dim(), 4);
  EXPECT_EQ(p.sense, Sense::minimize);
  EXPECT_EQ(p.inequalities.size(), 3u);
  // Tr_2 = I/d gives d^2 real conditions, plus the implied trace row.
  EXPECT_EQ(p.equalities.size(), 5u);
  EXPECT_EQ(p.equalities.back().label, "trace");
  for (const auto &e : p.equalities) EXPECT_LT(hermitian_defect(e.matrix.dense(4)), 1e-12);
  for (const auto &c : p.inequalities) {
    EXPECT_LT(hermitian_defect(c.matrix.dense(4)), 1e-12);
    EXPECT_EQ(c.bound, Bound::at_least);
    EXPECT_NEAR(c.rhs, 0.99 / 2, 1e-15);
  }
  const SdpProblem q = build_fmax_problem(s, constant(s, 0.01));
  EXPECT_EQ(q.sense, Sense::maximize);
  for (const auto &c : q.inequalities) EXPECT_EQ(c.bound, Bound::at_most);
  EXPECT_THROW(build_fmin_problem(s, std::vector<double>{0.1, 0.1}), ValidationError);
  EXPECT_THROW(build_fmin_problem(s, std::vector<double>{0.1, 0.1, 1.5}), ValidationError);
}

TEST(BuildProblem, EqualitiesEncodeReducedMatrix) {
  // For any Hermitian X the equality rows read off the entries of Tr_2 X.
  std::mt19937_64 rng(4);
  for (int d = 2; d <= 4; ++d) {
    const StateSet s = make_simplex(d);
    const SdpProblem p = build_fmin_problem(s, constant(s, 0.0));
    EXPECT_EQ(static_cast<int>(p.equalities.size()), d * d + 1);
    const CMatrix g = random_operator(d * d, rng);
    const CMatrix x = g + g.adjoint();
    const CMatrix r = trace_out_second(x, d, d);
    std::size_t row = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        if (i == j) {
          EXPECT_NEAR(p.equalities[row++].matrix.apply(x), r(i, i).real(), 1e-12);
        } else {
          EXPECT_NEAR(p.equalities[row++].matrix.apply(x), r(i, j).real(), 1e-12);
          EXPECT_NEAR(p.equalities[row++].matrix.apply(x), r(i, j).imag(), 1e-12);
        }
      }
    EXPECT_NEAR(p.equalities[row].matrix.apply(x), x.trace().real(), 1e-12);
  }
}

TEST(BuildProblem, IdentityChannelIsFeasible) {
  for (int d = 2; d <= 4; ++d) {
    const StateSet s = make_basis_plus_totally_rotated(d);
    for (double e : {0.0, 0.05}) {
      const SdpProblem p = build_fmin_problem(s, constant(s, e));
      const CMatrix chi = maximally_entangled(d).projector();
      for (double sl : inequality_slacks(p, chi)) EXPECT_GE(sl, -1e-15);
      for (const auto &eq : p.equalities) EXPECT_NEAR(eq.matrix.apply(chi), eq.rhs, 1e-15);
    }
  }
}

TEST(Solve, UnconstrainedMinimumIsZero) {
  const StateSet s = make_simplex(2);
  const SdpSolution sol = solve_f_min(s, constant(s, 1.0));
  ASSERT_TRUE(sol.optimal());
  EXPECT_NEAR(sol.objective, 0.0, 1e-6);
}

TEST(Solve, ZeroErrorOnIdentifyingSets) {
  EXPECT_NEAR(fmin(make_simplex(3), constant(make_simplex(3), 0.0)), 1.0, 1e-6);
  const StateSet b = make_basis_plus_totally_rotated(3);
  EXPECT_NEAR(fmin(b, constant(b, 0.0)), 1.0, 1e-6);
  EXPECT_NEAR(fmax(b, constant(b, 0.0)), 1.0, 1e-6);
}

TEST(Solve, SimplexTightness) {
  for (int d = 2; d <= 5; ++d) {
    const StateSet s = make_simplex(d);
    const auto eps = constant(s, 0.01);
    const SdpSolution sol = solve_f_min(s, eps);
    ASSERT_TRUE(sol.optimal()) << d;
    EXPECT_NEAR(sol.objective, 1.0 - d * 0.01, 1e-6) << d;
    EXPECT_LE(sol.primal_residual, 1e-7);
    EXPECT_LE(sol.dual_residual, 1e-7);
    EXPECT_LE(sol.duality_gap, 1e-7);
    expect_witness(s, eps, sol, false);
    EXPECT_NO_THROW(sol.choi());
  }
}

TEST(Solve, OrthonormalPairAdmitsDephasing) {
  const StateSet s = make_computational_basis(2);
  const double v = fmin(s, constant(s, 0.0));
  // full z-dephasing is feasible with process fidelity 1/2
  const KrausChannel z(2, {Operator::Identity(2, 2) / std::sqrt(2.0), pauli_z() / std::sqrt(2.0)});
  EXPECT_NEAR(process_fidelity(choi_from_kraus(z)), 0.5, 1e-15);
  EXPECT_LE(v, 0.5 + 1e-7);
  EXPECT_LT(v, 1.0);
}

TEST(Solve, MaximumForQubitSimplex) {
  const StateSet s = make_simplex(2);
  const auto u = constant(s, 0.01);
  const SdpSolution sol = solve_f_max(s, u);
  ASSERT_TRUE(sol.optimal());
  EXPECT_GE(sol.objective, 0.98 - 1e-7);
  EXPECT_LE(sol.objective, 0.99 + 1e-7);
  expect_witness(s, u, sol, true);
}

TEST(Solve, MaximumRespectsSymmetricPovmUpperBound) {
  for (int d = 2; d <= 4; ++d) {
    const StateSet s = make_simplex(d);
    const auto u = constant(s, 0.02);
    const double upper = *symmetric_povm_bounds(s, u, std::span<const double>(u)).upper;
    EXPECT_LE(fmax(s, u), upper + 1e-7);
  }
}

TEST(Solve, PrecisionModesAgree) {
  const StateSet s = make_basis_plus_totally_rotated(3);
  const auto eps = constant(s, 0.01);
  SolveSettings a, b, c;
  a.precision = Precision::standard;
  b.precision = Precision::extended;
  c.precision = Precision::adaptive;
  const auto ra = solve_f_min(s, eps, a), rb = solve_f_min(s, eps, b), rc = solve_f_min(s, eps, c);
  ASSERT_TRUE(ra.optimal() && rb.optimal() && rc.optimal());
  EXPECT_NEAR(ra.objective, rb.objective, 1e-6);
  EXPECT_NEAR(rc.objective, rb.objective, 1e-6);
}

TEST(Solve, Deterministic) {
  const StateSet s = make_haar_random_set(3, 3, 9);
  const auto eps = constant(s, 1e-3);
  const auto a = solve_f_min(s, eps), b = solve_f_min(s, eps);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Solve, MaxIterationsIsReported) {
  const StateSet s = make_simplex(3);
  SolveSettings st;
  st.max_iter = 2;
  st.precision = Precision::standard;
  const auto sol = solve_f_min(s, constant(s, 0.01), st);
  EXPECT_EQ(sol.status, Status::max_iterations);
  EXPECT_GT(sol.primal_residual + sol.dual_residual + sol.duality_gap, 0.0);
  EXPECT_THROW(f_min(s, constant(s, 0.01), st), SolverError);
}

TEST(Solve, DetectsInfeasibility) {
  // Tr(chi phi-hat) >= 2 is impossible for a density matrix.
  const StateSet s = make_simplex(2);
  SdpProblem p = build_fmin_problem(s, constant(s, 0.0));
  InequalityConstraint c;
  c.matrix = HermitianTerm::outer(maximally_entangled(2).amplitudes());
  c.rhs = 2.0;
  c.bound = Bound::at_least;
  p.inequalities.push_back(c);
  EXPECT_EQ(solve(p).status, Status::infeasible);
}

TEST(Certificates, SimplexEightAndRotatedSet) {
  const StateSet s = make_simplex(8);
  const auto cert = f_min(s, constant(s, 0.01));
  ASSERT_TRUE(cert.lower.has_value());
  EXPECT_NEAR(*cert.lower, 0.92, 1e-5);
  EXPECT_EQ(cert.metadata.at("status"), "optimal");
  EXPECT_EQ(cert.method, BoundMethod::sdp_min);
  const StateSet b = make_basis_plus_totally_rotated(8);
  const auto rot = f_min(b, constant(b, 0.01));
  EXPECT_LT(*rot.lower, 0.92 - 1e-3);
  const auto up = f_max(s, constant(s, 0.01));
  ASSERT_TRUE(up.upper.has_value());
  EXPECT_FALSE(up.lower.has_value());
  EXPECT_LE(*up.upper, 0.99 + 1e-6);
}

TEST(Sweep, SimplexEightIsLinear) {
  const StateSet s = make_simplex(8);
  const std::vector<double> grid{0.0, 0.005, 0.01};
  const auto curve = sweep(s, grid);
  ASSERT_EQ(curve.size(), 3u);
  for (const auto &pt : curve) {
    EXPECT_EQ(pt.status, Status::optimal);
    EXPECT_NEAR(pt.f_min, 1.0 - 8 * pt.eps, 1e-5);
  }
  const std::vector<double> unsorted{0.01, 0.0};
  EXPECT_THROW(sweep(s, unsorted), ValidationError);
}

TEST(Sweep, NonIncreasingAndMidpointConvex) {
  const StateSet s = make_basis_plus_totally_rotated(3);
  std::vector<double> grid;
  for (int i = 0; i <= 8; ++i) grid.push_back(0.0025 * i);
  const auto curve = sweep(s, grid, {}, 2);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    ASSERT_EQ(curve[i].status, Status::optimal);
    EXPECT_DOUBLE_EQ(curve[i].eps, grid[i]);
    if (i) EXPECT_LE(curve[i].f_min, curve[i - 1].f_min + 1e-6);
    if (i && i + 1 < curve.size())
      EXPECT_LE(curve[i].f_min, 0.5 * (curve[i - 1].f_min + curve[i + 1].f_min) + 1e-6);
  }
}

TEST(SqrtFit, SimplexHasNoSqrtTerm) {
  // 1 - F_min = d eps exactly, so the through-origin sqrt fit returns the
  // projection of the linear curve, d sum eps^1.5 / sum eps, and nothing more.
  for (int d = 2; d <= 3; ++d) {
    const auto fit = fit_sqrt_coefficient(make_simplex(d));
    double num = 0.0, den = 0.0;
    for (double e : sqrt_fit_grid()) {
      num += d * e * std::sqrt(e);
      den += e;
    }
    EXPECT_NEAR(fit.coefficient, num / den, 1e-3);
    EXPECT_LT(fit.coefficient, 0.01 * d);
  }
}

TEST(SqrtFit, CoefficientBoundedByC) {
  std::vector<StateSet> sets{make_basis_plus_totally_rotated(3)};
  for (std::uint64_t seed = 0; seed < 3; ++seed) sets.push_back(make_haar_random_set(3, 3, seed));
  for (const auto &s : sets) {
    const double C = sqrt_eps_coefficient(s).C;
    const auto fit = fit_sqrt_coefficient(s);
    EXPECT_LE(fit.coefficient, C) << "C=" << C;
    EXPECT_GT(fit.coefficient, 0.0);
    // leading-order bound holds pointwise on the fit grid
    for (const auto &pt : fit.points) EXPECT_LE(1.0 - pt.f_min, C * std::sqrt(pt.eps) * 1.1);
  }
}

TEST(SqrtFit, FailsOnNonIdentifyingInputForC) {
  EXPECT_THROW(sqrt_eps_coefficient(make_computational_basis(3)), InapplicableError);
}

TEST(Convexity, EndpointsAreExact) {
  const StateSet s = make_simplex(2);
  const std::vector<double> e1{0.0, 0.01, 0.02}, e2{0.03, 0.0, 0.01}, t{0.0, 1.0};
  const auto rep = convexity_probe(s, e1, e2, t);
  for (const auto &r : rep.rows) {
    EXPECT_NEAR(r.convexity_slack(), 0.0, 1e-6);
    EXPECT_NEAR(r.concavity_slack(), 0.0, 1e-6);
  }
}

TEST(Convexity, SimplexThreeMidpoint) {
  const StateSet s = make_simplex(3);
  const std::vector<double> t{0.5};
  const auto rep = convexity_probe(s, constant(s, 0.0), constant(s, 0.02), t);
  EXPECT_GE(rep.min_convexity_slack, -1e-6);
  EXPECT_GE(rep.min_concavity_slack, -1e-6);
  EXPECT_TRUE(rep.holds());
}

TEST(Convexity, RandomNonConstantErrors) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 0.05);
  const StateSet s = make_simplex(2);
  const std::vector<double> t{0.1, 0.3, 0.5, 0.7, 0.9};
  for (int trial = 0; trial < 2; ++trial) {
    std::vector<double> e1, e2;
    for (int k = 0; k < 3; ++k) {
      e1.push_back(u(rng));
      e2.push_back(u(rng));
    }
    const auto rep = convexity_probe(s, e1, e2, t);
    EXPECT_GE(rep.min_convexity_slack, -1e-6);
    EXPECT_GE(rep.min_concavity_slack, -1e-6);
  }
}

TEST(Properties, MonotoneInErrors) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 0.03);
  for (int trial = 0; trial < 10; ++trial) {
    const StateSet s = trial % 2 ? make_simplex(2 + trial % 3) : make_haar_random_set(2 + trial % 2, 4, trial);
    std::vector<double> lo, hi;
    for (int k = 0; k < s.size(); ++k) {
      lo.push_back(u(rng));
      hi.push_back(lo.back() + u(rng));
    }
    EXPECT_GE(fmin(s, lo), fmin(s, hi) - 1e-6) << trial;
  }
}

TEST(Properties, AnalyticBoundsSitBelowSdpMinimum) {
  for (int d = 2; d <= 4; ++d) {
    const StateSet s = make_simplex(d);
    for (double e : {1e-4, 1e-2}) {
      const auto eps = constant(s, e);
      const double m = fmin(s, eps);
      EXPECT_LE(*symmetric_povm_bounds(s, eps).lower, m + 1e-6);
      EXPECT_LE(*lower_bound_small_eps(s, e).lower, m + 1e-6);
      // any channel meeting the constraints bounds F_min from above
      EXPECT_LE(m, process_fidelity(choi_from_kraus(min_fidelity_channel(s, e))) + 1e-6);
    }
  }
  const StateSet h = make_haar_random_set(3, 3, 4);
  EXPECT_LE(*lower_bound_small_eps(h, 1e-5).lower, fmin(h, constant(h, 1e-5)) + 1e-6);
}

TEST(Properties, MinMaxOrderedOnCommonFeasibleSet) {
  // All states with fidelity exactly 1 - e: F_min ({>= 1-e}) <= F of the
  // min channel <= F_max ({<= 1-e}).
  for (int d = 2; d <= 3; ++d) {
    const StateSet s = make_simplex(d);
    const auto eps = constant(s, 0.02);
    const double f = process_fidelity(choi_from_kraus(min_fidelity_channel(s, 0.02)));
    EXPECT_LE(fmin(s, eps), f + 1e-6);
    EXPECT_GE(fmax(s, eps), f - 1e-6);
  }
}

TEST(Properties, PerfectFidelityExactlyForIdentifyingSets) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> dim(2, 4), extra(0, 2);
  int identifying = 0, bases = 0;
  for (int t = 0; t < 50; ++t) {
    const int d = dim(rng);
    StateSet s;
    if (t % 3 == 0) {
      s = random_basis(d, rng);
    } else {
      const int n = d + extra(rng);
      s = make_haar_random_set(d, n, 1000 + t);
    }
    const bool id = identifies_unitaries(s).identifies;
    const double v = fmin(s, constant(s, 0.0));
    if (id) {
      ++identifying;
      EXPECT_NEAR(v, 1.0, 1e-5) << "t=" << t;
    } else {
      ++bases;
      EXPECT_LE(v, 1.0 - 1e-3) << "t=" << t;
    }
  }
  EXPECT_GT(identifying, 20);
  EXPECT_GT(bases, 10);
}

TEST(Properties, SolvedChoiMatricesPassInvariants) {
  for (const auto &s : {make_simplex(3), make_basis_plus_totally_rotated(4), make_haar_random_set(3, 4, 2)}) {
    const auto eps = constant(s, 5e-3);
    const auto lo = solve_f_min(s, eps);
    const auto hi = solve_f_max(s, eps);
    ASSERT_TRUE(lo.optimal() && hi.optimal());
    expect_witness(s, eps, lo, false);
    expect_witness(s, eps, hi, true);
    EXPECT_LE(lo.max_constraint_violation, 1e-6);
    EXPECT_LE(hi.max_constraint_violation, 1e-6);
  }
}
