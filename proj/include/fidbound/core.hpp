#pragma once

// Complex linear-algebra substrate: pure states, operators, tensor products,
// partial traces and the maximally entangled state.
//
// Composite indexing convention: for a tensor product A (x) B with factor
// dimensions d1, d2, the composite index of (i1, i2) is i1 * d2 + i2, i.e. the
// first factor is the most significant digit.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "fidbound/errors.hpp"

namespace fidbound {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Linear operator on C^d. Hermiticity and positivity are asserted by the
// operations that need them.
using Operator = CMatrix;

namespace tolerance {
inline constexpr double state_norm = 1e-9;
inline constexpr double hermitian = 1e-10;
inline constexpr double psd = 1e-8;
inline constexpr double partial_trace = 1e-8;
inline constexpr double trace = 1e-9;
inline constexpr double fidelity_clamp = 1e-9;
inline constexpr double cptp = 1e-9;
} // namespace tolerance

// Unit-norm vector in C^d.
class PureState {
public:
  PureState() = default;

  // Throws ValidationError when the norm differs from 1 by more than `tol`.
  explicit PureState(CVector amplitudes, double tol = tolerance::state_norm)
      : amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() == 0) throw ValidationError("pure state must have dimension >= 1");
    const double norm = amplitudes_.norm();
    if (!(std::abs(norm - 1.0) <= tol))
      throw ValidationError("pure state norm " + std::to_string(norm) + " differs from 1");
  }

  // Normalizes a nonzero vector.
  static PureState normalized(const CVector &v) {
    const double norm = v.norm();
    if (!(norm > 0.0)) throw ValidationError("cannot normalize the zero vector");
    return PureState(v / norm);
  }

  static PureState basis(int dim, int index) {
    if (index < 0 || index >= dim) throw ShapeError("basis index out of range");
    CVector v = CVector::Zero(dim);
    v(index) = 1.0;
    return PureState(std::move(v));
  }

  int dim() const noexcept { return static_cast<int>(amplitudes_.size()); }
  const CVector &amplitudes() const noexcept { return amplitudes_; }
  cplx operator()(int i) const { return amplitudes_(i); }

  // |psi><psi|
  Operator projector() const { return amplitudes_ * amplitudes_.adjoint(); }

  // <this|other>
  cplx inner(const PureState &other) const {
    if (other.dim() != dim()) throw ShapeError("inner product of states with different dimensions");
    return amplitudes_.dot(other.amplitudes_);
  }

  // Copy with the global phase fixed so that the first amplitude with modulus
  // above `eps` is real and positive.
  PureState phase_normalized(double eps = 1e-12) const {
    for (int i = 0; i < dim(); ++i) {
      const double m = std::abs(amplitudes_(i));
      if (m > eps) {
        PureState out;
        out.amplitudes_ = amplitudes_ * (std::conj(amplitudes_(i)) / m);
        return out;
      }
    }
    return *this;
  }

private:
  CVector amplitudes_;
};

// True when the states agree up to a global phase: |<a|b>| = 1 within tol.
inline bool equal_up_to_phase(const PureState &a, const PureState &b, double tol = 1e-12) {
  if (a.dim() != b.dim()) return false;
  return std::abs(std::abs(a.inner(b)) - 1.0) <= tol;
}

inline double max_abs(const CMatrix &m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// max |M - M^dagger|
inline double hermitian_defect(const CMatrix &m) { return max_abs(m - m.adjoint()); }

inline CMatrix hermitian_part(const CMatrix &m) { return 0.5 * (m + m.adjoint()); }

// Smallest eigenvalue of the Hermitian part of m.
inline double min_eigenvalue(const CMatrix &m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Kronecker product, first factor most significant.
inline Operator tensor(const Operator &a, const Operator &b) {
  const Eigen::Index ra = a.rows(), ca = a.cols(), rb = b.rows(), cb = b.cols();
  Operator out(ra * rb, ca * cb);
  for (Eigen::Index i = 0; i < ra; ++i)
    for (Eigen::Index j = 0; j < ca; ++j) out.block(i * rb, j * cb, rb, cb) = a(i, j) * b;
  return out;
}

inline CVector tensor(const CVector &a, const CVector &b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

inline PureState tensor(const PureState &a, const PureState &b) {
  return PureState(tensor(a.amplitudes(), b.amplitudes()));
}

enum class Subsystem { first = 1, second = 2 };

// Partial trace of an operator on C^d1 (x) C^d2 over the indicated factor.
inline Operator partial_trace(const Operator &op, Subsystem which, int d1, int d2) {
  if (d1 < 1 || d2 < 1 || op.rows() != static_cast<Eigen::Index>(d1) * d2 ||
      op.cols() != op.rows())
    throw ShapeError("partial_trace: operator is " + std::to_string(op.rows()) + "x" +
                     std::to_string(op.cols()) + ", expected " + std::to_string(d1 * d2) +
                     " square");
  if (which == Subsystem::second) {
    Operator out = Operator::Zero(d1, d1);
    for (int i = 0; i < d1; ++i)
      for (int j = 0; j < d1; ++j) {
        cplx s = 0.0;
        for (int k = 0; k < d2; ++k) s += op(i * d2 + k, j * d2 + k);
        out(i, j) = s;
      }
    return out;
  }
  Operator out = Operator::Zero(d2, d2);
  for (int k = 0; k < d1; ++k) out += op.block(k * d2, k * d2, d2, d2);
  return out;
}

// (1/sqrt d) sum_x |x>|x>
inline PureState maximally_entangled(int d) {
  if (d < 1) throw ShapeError("maximally_entangled: d must be >= 1");
  CVector v = CVector::Zero(static_cast<Eigen::Index>(d) * d);
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  for (int x = 0; x < d; ++x) v(x * d + x) = s;
  return PureState(std::move(v));
}

// Clamps a fidelity-like quantity into [0, 1] when it lies within `tol` of the
// interval; larger excursions indicate a bug or a solver failure.
inline double clamp_fidelity(double f, double tol = tolerance::fidelity_clamp) {
  if (f < -tol || f > 1.0 + tol)
    throw ValidationError("fidelity " + std::to_string(f) + " outside [0, 1]");
  return std::clamp(f, 0.0, 1.0);
}

// F_avg = (d F + 1) / (d + 1)
inline double average_fidelity(double process_fidelity, int d) {
  return (d * process_fidelity + 1.0) / (d + 1.0);
}

} // namespace fidbound
