#pragma once

// Channel constructors used for simulations and tightness checks.

#include <cmath>
#include <string>
#include <vector>

#include "fidbound/choi.hpp"
#include "fidbound/state_sets.hpp"

namespace fidbound {

// Generalized Pauli (clock and shift) operator X^a Z^b on C^d.
inline Operator weyl_operator(int d, int a, int b) {
  Operator shift = Operator::Zero(d, d);
  Operator clock = Operator::Zero(d, d);
  for (int x = 0; x < d; ++x) {
    shift((x + a) % d, x) = 1.0;
    clock(x, x) = std::polar(1.0, 2.0 * std::numbers::pi * ((b * x) % d) / d);
  }
  return shift * clock;
}

// Largest q for which (1 - q) rho + q I/d is completely positive.
inline double depolarizing_max_q(int d) { return static_cast<double>(d) * d / (static_cast<double>(d) * d - 1.0); }

// E(rho) = (1 - q) rho + q I / d, q in [0, d^2/(d^2-1)].
inline KrausChannel depolarizing(int d, double q) {
  if (d < 2) throw ValidationError("depolarizing: d must be >= 2");
  const double qmax = depolarizing_max_q(d);
  if (!(q >= 0.0 && q <= qmax + 1e-15))
    throw ValidationError("depolarizing: q = " + std::to_string(q) + " outside the CP range [0, " +
                          std::to_string(qmax) + "]");
  // The fully depolarizing map is the uniform Weyl twirl (1/d^2) sum W rho W^dag.
  const double d2 = static_cast<double>(d) * d;
  std::vector<Operator> kraus;
  kraus.push_back(std::sqrt(std::max(0.0, 1.0 - q + q / d2)) * Operator::Identity(d, d));
  if (q > 0.0) {
    const double w = std::sqrt(q / d2);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        if (a != 0 || b != 0) kraus.push_back(w * weyl_operator(d, a, b));
  }
  return KrausChannel(d, std::move(kraus));
}

// Depolarizing channel whose pure-state fidelities all equal 1 - eps.
inline KrausChannel depolarizing_for_state_infidelity(int d, double eps) {
  return depolarizing(d, d * eps / (d - 1.0));
}

// p = d (N - 1) eps / ((d - 1)(N - d))
inline double min_fidelity_mixing(int d, int n, double eps) {
  return static_cast<double>(d) * (n - 1) * eps / ((d - 1.0) * (n - d));
}

// Largest eps for which the fidelity-minimizing channel exists (p = 1).
inline double min_fidelity_max_eps(int d, int n) {
  return (d - 1.0) * (n - d) / (static_cast<double>(d) * (n - 1));
}

// E(rho) = (1 - p) rho + p (d/N) sum_k psi-hat_k rho psi-hat_k for a
// symmetric-POVM set; every input state has fidelity exactly 1 - eps.
inline KrausChannel min_fidelity_channel(const StateSet &set, double eps) {
  const int d = set.dim();
  const int n = set.size();
  if (n <= d) throw InapplicableError("min_fidelity_channel: requires N > d");
  const auto povm = is_symmetric_povm(set);
  if (!povm.symmetric) throw InapplicableError("min_fidelity_channel: set is not a symmetric POVM");
  if (!(eps >= 0.0)) throw ValidationError("min_fidelity_channel: eps must be >= 0");
  const double p = min_fidelity_mixing(d, n, eps);
  if (p > 1.0 + 1e-15)
    throw ValidationError("min_fidelity_channel: mixing p = " + std::to_string(p) +
                          " > 1; maximal admissible eps is " + std::to_string(min_fidelity_max_eps(d, n)));
  std::vector<Operator> kraus;
  kraus.push_back(std::sqrt(std::max(0.0, 1.0 - p)) * Operator::Identity(d, d));
  if (p > 0.0) {
    const double w = std::sqrt(p * d / n);
    for (const auto &s : set.states()) kraus.push_back(w * s.projector());
  }
  return KrausChannel(d, std::move(kraus));
}

inline Operator pauli_x() {
  Operator m = Operator::Zero(2, 2);
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  return m;
}

inline Operator pauli_y() {
  Operator m = Operator::Zero(2, 2);
  m(0, 1) = cplx(0, -1);
  m(1, 0) = cplx(0, 1);
  return m;
}

inline Operator pauli_z() {
  Operator m = Operator::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

// E(rho) = (1 - 2 eps) rho + eps (X rho X + Y rho Y), eps in [0, 1/2].
inline KrausChannel xy_dephasing(double eps) {
  if (!(eps >= 0.0 && eps <= 0.5)) throw ValidationError("xy_dephasing: eps must lie in [0, 1/2]");
  return KrausChannel(2, {std::sqrt(1.0 - 2.0 * eps) * Operator::Identity(2, 2), std::sqrt(eps) * pauli_x(),
                          std::sqrt(eps) * pauli_y()});
}

struct CptpReport {
  double completeness_deviation = 0.0; // max |sum K^dag K - I|
  double choi_min_eigenvalue = 0.0;
  bool passes = false;
};

// Report-only check; never throws on an invalid channel.
inline CptpReport validate_cptp(const KrausChannel &channel, double tol = 1e-10) {
  CptpReport r;
  const int d = channel.dim();
  r.completeness_deviation = kraus_completeness(d, channel.kraus()).max_deviation;
  const CVector phi = maximally_entangled(d).amplitudes();
  CMatrix chi = CMatrix::Zero(d * d, d * d);
  const Operator id = Operator::Identity(d, d);
  for (const auto &k : channel.kraus()) {
    const CVector v = tensor(id, k) * phi;
    chi.noalias() += v * v.adjoint();
  }
  r.choi_min_eigenvalue = min_eigenvalue(chi);
  r.passes = r.completeness_deviation <= tol && r.choi_min_eigenvalue >= -tol;
  return r;
}

// Random channel from a Haar-like random isometry with `rank` Kraus operators.
inline KrausChannel random_channel(int d, int rank, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix g(static_cast<Eigen::Index>(rank) * d, d);
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = cplx(re, im);
    }
  // isometry V = G (G^dag G)^{-1/2}
  Eigen::SelfAdjointEigenSolver<CMatrix> es(g.adjoint() * g);
  const CMatrix inv_sqrt = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                           es.eigenvectors().adjoint();
  const CMatrix v = g * inv_sqrt;
  std::vector<Operator> kraus;
  for (int r = 0; r < rank; ++r) kraus.push_back(v.block(static_cast<Eigen::Index>(r) * d, 0, d, d));
  return KrausChannel(d, std::move(kraus));
}

// (1 - t) id + t E as a Kraus channel.
inline KrausChannel mix_with_identity(const KrausChannel &channel, double t) {
  const int d = channel.dim();
  std::vector<Operator> kraus;
  kraus.push_back(std::sqrt(1.0 - t) * Operator::Identity(d, d));
  for (const auto &k : channel.kraus()) kraus.push_back(std::sqrt(t) * k);
  return KrausChannel(d, std::move(kraus));
}

} // namespace fidbound
