#include <algorithm>
#include <random>

#include "test_support.hpp"

using namespace fidbound;
using namespace fidbound::testing;

namespace {

PureState ket(std::initializer_list<cplx> amps) {
  CVector v(static_cast<Eigen::Index>(amps.size()));
  Eigen::Index i = 0;
  for (cplx a : amps) v(i++) = a;
  return PureState::normalized(v);
}

StateSet of(int d, std::vector<PureState> s) { return StateSet(d, std::move(s)); }

const double r2 = 1.0 / std::sqrt(2.0);

// Null-space dimension of the commutator map, built directly from vec(XP - PX)
// with the row-major vectorization and a full SVD.
int commutant_oracle(const StateSet &set) {
  const int d = set.dim();
  CMatrix big(static_cast<Eigen::Index>(set.size()) * d * d, d * d);
  for (int k = 0; k < set.size(); ++k) {
    const CMatrix p = set[k].projector();
    const CMatrix id = CMatrix::Identity(d, d);
    // row-major vec(XP) = (I (x) P^T) vec(X), vec(PX) = (P (x) I) vec(X)
    big.block(static_cast<Eigen::Index>(k) * d * d, 0, d * d, d * d) =
        tensor(id, CMatrix(p.transpose())) - tensor(p, id);
  }
  Eigen::BDCSVD<CMatrix> svd(big);
  const RVector sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-9 * std::max(1.0, sv(0))) ++rank;
  return d * d - rank;
}

// Random set mixing computational basis vectors, Fourier vectors and Haar states.
StateSet random_mixed_set(std::mt19937_64 &rng) {
  std::uniform_int_distribution<int> dim(1, 5), count(1, 7), kind(0, 3);
  const int d = dim(rng), n = count(rng);
  const StateSet fourier = d >= 2 ? make_fourier_basis(d) : make_computational_basis(1);
  std::vector<PureState> s;
  for (int k = 0; k < n; ++k) {
    std::uniform_int_distribution<int> idx(0, d - 1);
    switch (kind(rng)) {
    case 0:
    case 1: s.push_back(PureState::basis(d, idx(rng))); break;
    case 2: s.push_back(fourier[idx(rng)]); break;
    default: s.push_back(haar_random_state(d, rng)); break;
    }
  }
  return StateSet(d, std::move(s));
}

} // namespace

TEST(StateSet, ValidatesMembers) {
  EXPECT_THROW(StateSet(2, {}), ValidationError);
  EXPECT_THROW(StateSet(2, {PureState::basis(3, 0)}), ShapeError);
  EXPECT_THROW(StateSet(2, {PureState::basis(2, 0)}, {"a", "b"}), ValidationError);
  const StateSet s(2, {PureState::basis(2, 0), PureState::basis(2, 0)});
  ASSERT_EQ(s.duplicates().size(), 1u);
  EXPECT_EQ(s.duplicates()[0], std::make_pair(0, 1));
}

TEST(Gram, OrthonormalPair) {
  const CMatrix m = gram(make_computational_basis(2)).entries();
  EXPECT_LT(max_abs(m - CMatrix::Identity(2, 2)), 1e-15);
}

TEST(Gram, ZeroAndPlus) {
  const CMatrix m = gram(of(2, {ket({1, 0}), ket({1, 1})})).entries();
  EXPECT_NEAR(m(0, 1).real(), r2, 1e-15);
  EXPECT_NEAR(m(1, 0).real(), r2, 1e-15);
  EXPECT_NEAR(m(0, 0).real(), 1.0, 1e-15);
}

TEST(Gram, InvariantsOnRandomSets) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 30; ++t) {
    const StateSet s = random_mixed_set(rng);
    const CMatrix m = gram(s).entries();
    EXPECT_LT(hermitian_defect(m), 1e-12);
    for (int k = 0; k < s.size(); ++k) EXPECT_NEAR(m(k, k).real(), 1.0, 1e-12);
    EXPECT_GE(min_eigenvalue(m), -1e-10);
    for (int a = 0; a < s.size(); ++a)
      for (int b = 0; b < s.size(); ++b)
        EXPECT_LT(std::abs(m(a, b) - s[a].amplitudes().dot(s[b].amplitudes())), 1e-14);
  }
}

TEST(Gram, SimplexQubitOverlaps) {
  const CMatrix m = gram(make_simplex(2)).entries();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      if (a != b) EXPECT_NEAR(std::norm(m(a, b)), 0.25, 1e-14);
}

TEST(OverlapGraph, OrthogonalPairHasNoEdges) {
  const OverlapGraph g = overlap_graph(make_computational_basis(2));
  EXPECT_TRUE(g.edges().empty());
  EXPECT_FALSE(g.connected());
}

TEST(OverlapGraph, ZeroPlusOneIsAPath) {
  const OverlapGraph g = overlap_graph(of(2, {ket({1, 0}), ket({1, 1}), ket({0, 1})}));
  const std::vector<std::pair<int, int>> expected{{0, 1}, {1, 2}};
  EXPECT_EQ(g.edges(), expected);
  EXPECT_TRUE(g.connected());
}

TEST(OverlapGraph, SimplexIsComplete) {
  for (int d = 2; d <= 8; ++d) {
    const OverlapGraph g = overlap_graph(make_simplex(d));
    EXPECT_EQ(static_cast<int>(g.edges().size()), d * (d + 1) / 2);
    for (int a = 0; a <= d; ++a) EXPECT_FALSE(g.has_edge(a, a));
  }
}

TEST(OverlapGraph, EdgesAreSymmetricAndWeightsInUnitInterval) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    const StateSet s = random_mixed_set(rng);
    const OverlapGraph g = overlap_graph(s);
    for (int a = 0; a < g.vertex_count(); ++a)
      for (const auto &e : g.neighbors(a)) {
        EXPECT_TRUE(g.has_edge(e.to, a));
        EXPECT_NE(e.to, a);
        EXPECT_GT(e.weight, 0.0);
        EXPECT_LE(e.weight, 1.0 + 1e-12);
        EXPECT_NEAR(e.weight, std::abs(s[a].inner(s[e.to])), 1e-14);
      }
  }
}

TEST(Spanning, Examples) {
  EXPECT_TRUE(is_spanning(make_computational_basis(2)));
  EXPECT_TRUE(is_spanning(of(2, {ket({1, 0}), ket({1, 1})})));
  EXPECT_FALSE(is_spanning(of(2, {ket({1, 0})})));
  EXPECT_FALSE(is_spanning(of(3, {ket({1, 0, 0}), ket({1, 1, 0}), ket({1, -1, 0})})));
}

TEST(Identifiability, Examples) {
  const auto basis = identifies_unitaries(make_computational_basis(4));
  EXPECT_FALSE(basis.identifies);
  EXPECT_TRUE(basis.spanning);
  EXPECT_EQ(basis.components.size(), 4u);
  EXPECT_NE(basis.reason.find("graph disconnected"), std::string::npos);

  EXPECT_TRUE(identifies_unitaries(make_basis_plus_totally_rotated(4)).identifies);
  const auto pair = identifies_unitaries(of(2, {ket({1, 0}), ket({1, 1})}));
  EXPECT_TRUE(pair.identifies);
  EXPECT_TRUE(pair.reason.empty());

  const auto line = identifies_unitaries(of(3, {ket({1, 0, 0}), ket({1, 1, 0})}));
  EXPECT_FALSE(line.identifies);
  EXPECT_NE(line.reason.find("do not span"), std::string::npos);
}

TEST(Commutant, Examples) {
  EXPECT_EQ(commutant_dimension(make_computational_basis(2)), 2);
  EXPECT_EQ(commutant_dimension(of(2, {ket({1, 0}), ket({1, 1})})), 1);
  EXPECT_EQ(commutant_dimension(make_simplex(3)), 1);
  EXPECT_EQ(commutant_oracle(of(2, {ket({1, 0}), ket({1, 1})})), 1);
  EXPECT_EQ(commutant_oracle(make_simplex(3)), 1);
}

TEST(Commutant, EquivalentToIdentifiabilityOnRandomSets) {
  std::mt19937_64 rng(2024);
  int identifying = 0;
  for (int t = 0; t < 200; ++t) {
    const StateSet s = random_mixed_set(rng);
    const int dim = commutant_dimension(s);
    EXPECT_EQ(dim, commutant_oracle(s));
    const bool id = identifies_unitaries(s).identifies;
    identifying += id;
    EXPECT_EQ(dim == 1, id) << "trial " << t << " d=" << s.dim() << " N=" << s.size();
  }
  EXPECT_GT(identifying, 20);
  EXPECT_LT(identifying, 180);
}

TEST(SymmetricPovm, SimplexFamily) {
  for (int d = 2; d <= 8; ++d) {
    const auto r = is_symmetric_povm(make_simplex(d));
    EXPECT_TRUE(r.symmetric) << d;
    EXPECT_NEAR(r.measured_c, 1.0 / (d * d), 1e-12);
    EXPECT_NEAR(r.expected_c, 1.0 / (d * d), 1e-15);
    EXPECT_LT(r.frame_defect, 1e-12);
    EXPECT_FALSE(r.trivial);
  }
}

TEST(SymmetricPovm, BasisPlusRotatedIsNot) {
  const auto r = is_symmetric_povm(make_basis_plus_totally_rotated(4));
  EXPECT_FALSE(r.symmetric);
  EXPECT_NEAR(r.overlap_spread, 0.25, 1e-12);
}

TEST(SymmetricPovm, BasisIsTrivial) {
  const auto r = is_symmetric_povm(make_computational_basis(3));
  EXPECT_TRUE(r.symmetric);
  EXPECT_NEAR(r.measured_c, 0.0, 1e-15);
  EXPECT_TRUE(r.trivial);
  EXPECT_FALSE(identifies_unitaries(make_computational_basis(3)).connected);
}

TEST(SymmetricPovm, QubitSicAndMubPair) {
  const auto sic = is_symmetric_povm(make_qubit_sic());
  EXPECT_TRUE(sic.symmetric);
  EXPECT_NEAR(sic.measured_c, 1.0 / 3.0, 1e-12);
  // Two MUBs: the frame condition holds but overlaps take the values 0 and 1/d.
  std::vector<PureState> mub;
  const StateSet z = make_computational_basis(3), f = make_fourier_basis(3);
  for (const auto &s : z.states()) mub.push_back(s);
  for (const auto &s : f.states()) mub.push_back(s);
  const auto r = is_symmetric_povm(StateSet(3, mub));
  EXPECT_FALSE(r.symmetric);
  EXPECT_LT(r.frame_defect, 1e-12);
}

TEST(Simplex, Construction) {
  const StateSet s2 = make_simplex(2);
  ASSERT_EQ(s2.size(), 3);
  EXPECT_NEAR(std::abs(s2[0](0) - r2), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(s2[0](1) - r2), 0.0, 1e-15);
  const cplx w = std::polar(1.0, 2 * std::numbers::pi / 3);
  EXPECT_NEAR(std::norm(s2[0].inner(s2[1])), std::norm(1.0 + w) / 4, 1e-15);
  EXPECT_NEAR(std::norm(s2[0].inner(s2[1])), 0.25, 1e-15);

  const StateSet s4 = make_simplex(4);
  CMatrix frame = CMatrix::Zero(4, 4);
  for (const auto &p : s4.states()) frame += p.projector();
  EXPECT_LT(max_abs(0.8 * frame - CMatrix::Identity(4, 4)), 1e-12);
  for (int d = 2; d <= 8; ++d) EXPECT_TRUE(identifies_unitaries(make_simplex(d)).identifies);
  EXPECT_THROW(make_simplex(1), ValidationError);
}

TEST(Fourier, MutuallyUnbiasedWithComputationalBasis) {
  const StateSet f2 = make_fourier_basis(2);
  EXPECT_TRUE(equal_up_to_phase(f2[0], ket({1, 1})));
  EXPECT_TRUE(equal_up_to_phase(f2[1], ket({1, -1})));
  for (int d = 2; d <= 8; ++d) {
    const StateSet f = make_fourier_basis(d);
    ASSERT_EQ(f.size(), d);
    EXPECT_LT(max_abs(gram(f).entries() - CMatrix::Identity(d, d)), 1e-12);
    for (int x = 0; x < d; ++x)
      for (int y = 0; y < d; ++y) EXPECT_NEAR(std::norm(f[y](x)), 1.0 / d, 1e-12);
  }
}

TEST(BasisPlusRotated, Construction) {
  const StateSet s = make_basis_plus_totally_rotated(2);
  ASSERT_EQ(s.size(), 3);
  EXPECT_TRUE(equal_up_to_phase(s[0], ket({1, 0})));
  EXPECT_TRUE(equal_up_to_phase(s[1], ket({0, 1})));
  EXPECT_TRUE(equal_up_to_phase(s[2], ket({1, 1})));
  for (int d = 2; d <= 6; ++d) {
    const StateSet b = make_basis_plus_totally_rotated(d);
    const OverlapGraph g = overlap_graph(b);
    EXPECT_EQ(static_cast<int>(g.edges().size()), d);
    for (int x = 0; x < d; ++x) {
      EXPECT_TRUE(g.has_edge(x, d));
      for (int y = x + 1; y < d; ++y) EXPECT_FALSE(g.has_edge(x, y));
    }
    EXPECT_TRUE(identifies_unitaries(b).identifies);
    EXPECT_FALSE(is_symmetric_povm(b).symmetric);
  }
}

TEST(FactorSimplex, ProductsReproduceSimplexStates) {
  const auto one = factor_simplex_state(1, 0);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_TRUE(equal_up_to_phase(one[0], ket({1, 1})));
  for (int n = 1; n <= 3; ++n) {
    const int d = 1 << n;
    const StateSet s = make_simplex(d);
    for (int k = 0; k <= d; ++k) {
      const auto f = factor_simplex_state(n, k);
      ASSERT_EQ(static_cast<int>(f.size()), n);
      CVector prod = f[0].amplitudes();
      for (int j = 1; j < n; ++j) prod = tensor(prod, f[static_cast<std::size_t>(j)].amplitudes());
      const CVector target = s[k].phase_normalized().amplitudes();
      const CVector got = PureState(prod).phase_normalized().amplitudes();
      EXPECT_LT((got - target).cwiseAbs().maxCoeff(), 1e-12) << "n=" << n << " k=" << k;
    }
  }
  EXPECT_THROW(factor_simplex_state(2, 5), ValidationError);
  EXPECT_THROW(factor_simplex_state(2, -1), ValidationError);
}

TEST(FrameOperator, SimplexQubitSpectrum) {
  const auto f = frame_operator_bipartite(make_simplex(2));
  ASSERT_EQ(f.eigenvalues.size(), 4);
  EXPECT_NEAR(f.eigenvalues(0), 1.5, 1e-9);
  EXPECT_NEAR(f.eigenvalues(1), 0.75, 1e-9);
  EXPECT_NEAR(f.eigenvalues(2), 0.75, 1e-9);
  EXPECT_NEAR(f.eigenvalues(3), 0.0, 1e-9);
}

TEST(FrameOperator, MaximallyEntangledEigenvector) {
  for (int d = 2; d <= 6; ++d) {
    const StateSet s = make_simplex(d);
    const auto f = frame_operator_bipartite(s);
    const CVector phi = maximally_entangled(d).amplitudes();
    EXPECT_LT((f.gamma * phi - (static_cast<double>(s.size()) / d) * phi).norm(), 1e-12);
  }
}

TEST(FrameOperator, SingleState) {
  const auto f = frame_operator_bipartite(of(2, {ket({1, 0})}));
  EXPECT_NEAR(f.eigenvalues(0), 1.0, 1e-15);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(f.eigenvalues(i), 0.0, 1e-15);
}

TEST(FrameOperator, MultiplicitiesForSymmetricPovms) {
  std::vector<StateSet> sets;
  for (int d = 2; d <= 5; ++d) sets.push_back(make_simplex(d));
  sets.push_back(make_qubit_sic());
  for (const auto &s : sets) {
    const int d = s.dim(), n = s.size();
    const double c = symmetric_povm_overlap(d, n);
    const auto f = frame_operator_bipartite(s);
    int top = 0, mid = 0, zero = 0;
    for (Eigen::Index i = 0; i < f.eigenvalues.size(); ++i) {
      const double e = f.eigenvalues(i);
      if (std::abs(e - static_cast<double>(n) / d) < 1e-9)
        ++top;
      else if (std::abs(e - (1.0 - c)) < 1e-9)
        ++mid;
      else if (std::abs(e) < 1e-9)
        ++zero;
    }
    EXPECT_EQ(top, 1) << "d=" << d << " N=" << n;
    EXPECT_EQ(mid, n - 1);
    EXPECT_EQ(zero, d * d - n);
  }
}

TEST(HaarSets, NormalizedDeterministicAndSpanning) {
  const StateSet a = make_haar_random_set(4, 6, 17);
  const StateSet b = make_haar_random_set(4, 6, 17);
  for (int k = 0; k < a.size(); ++k) {
    EXPECT_NEAR(a[k].amplitudes().norm(), 1.0, 1e-12);
    for (int i = 0; i < 4; ++i) {
      EXPECT_EQ(std::bit_cast<std::uint64_t>(a[k](i).real()), std::bit_cast<std::uint64_t>(b[k](i).real()));
      EXPECT_EQ(std::bit_cast<std::uint64_t>(a[k](i).imag()), std::bit_cast<std::uint64_t>(b[k](i).imag()));
    }
  }
  EXPECT_GT(max_abs(make_haar_random_set(4, 6, 18).columns() - a.columns()), 1e-3);
  for (std::uint64_t seed = 0; seed < 100; ++seed) EXPECT_TRUE(is_spanning(make_haar_random_set(4, 4, seed)));
}
