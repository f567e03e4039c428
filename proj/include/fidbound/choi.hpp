#pragma once

// Kraus and Choi representations of channels on C^d, channel application and
// the fidelity functionals (target = identity channel).

#include <string>
#include <utility>
#include <vector>

#include "fidbound/core.hpp"

namespace fidbound {

struct CompletenessReport {
  double max_deviation = 0.0; // max |sum_i K_i^dagger K_i - I| (entrywise)
};

inline CompletenessReport kraus_completeness(int d, const std::vector<Operator> &kraus) {
  Operator s = Operator::Zero(d, d);
  for (const auto &k : kraus) {
    if (k.rows() != d || k.cols() != d) throw ShapeError("Kraus operator has wrong shape");
    s.noalias() += k.adjoint() * k;
  }
  return {max_abs(s - Operator::Identity(d, d))};
}

// Channel stored as a list of Kraus operators.
class KrausChannel {
public:
  KrausChannel() = default;

  // Throws ValidationError unless sum K^dagger K = I within `tol`.
  KrausChannel(int d, std::vector<Operator> kraus, double tol = tolerance::cptp)
      : dim_(d), kraus_(std::move(kraus)) {
    if (d < 1) throw ShapeError("channel dimension must be >= 1");
    if (kraus_.empty()) throw ValidationError("channel needs at least one Kraus operator");
    const auto report = kraus_completeness(d, kraus_);
    if (!(report.max_deviation <= tol))
      throw ValidationError("Kraus operators violate trace preservation: max |sum K^dag K - I| = " +
                            std::to_string(report.max_deviation));
  }

  // No completeness check; used for inspecting candidate operator lists.
  static KrausChannel unchecked(int d, std::vector<Operator> kraus) {
    KrausChannel c;
    c.dim_ = d;
    c.kraus_ = std::move(kraus);
    for (const auto &k : c.kraus_)
      if (k.rows() != d || k.cols() != d) throw ShapeError("Kraus operator has wrong shape");
    return c;
  }

  static KrausChannel identity(int d) { return KrausChannel(d, {Operator::Identity(d, d)}); }

  int dim() const noexcept { return dim_; }
  const std::vector<Operator> &kraus() const noexcept { return kraus_; }

  // sum_i K_i rho K_i^dagger
  Operator apply(const Operator &rho) const {
    if (rho.rows() != dim_ || rho.cols() != dim_) throw ShapeError("apply: rho has wrong shape");
    Operator out = Operator::Zero(dim_, dim_);
    for (const auto &k : kraus_) out.noalias() += k * rho * k.adjoint();
    return out;
  }

private:
  int dim_ = 0;
  std::vector<Operator> kraus_;
};

struct ChoiTolerances {
  double hermitian = tolerance::hermitian;
  double psd = tolerance::psd;
  double partial_trace = tolerance::partial_trace;
  double trace = tolerance::trace;
};

// Measured deviations of a candidate matrix from the Choi conditions.
struct ChoiReport {
  double hermitian_defect = 0.0;
  double min_eigenvalue = 0.0;
  double partial_trace_defect = 0.0; // max |Tr_2(M) - I/d|
  double trace_defect = 0.0;         // |Tr M - 1|

  bool passes(const ChoiTolerances &tol = {}) const {
    return hermitian_defect <= tol.hermitian && min_eigenvalue >= -tol.psd &&
           partial_trace_defect <= tol.partial_trace && trace_defect <= tol.trace;
  }

  std::string describe_failure(const ChoiTolerances &tol = {}) const {
    std::string out;
    auto add = [&out](const std::string &s) { out += (out.empty() ? "" : "; ") + s; };
    if (!(hermitian_defect <= tol.hermitian))
      add("not Hermitian (max |M - M^dag| = " + std::to_string(hermitian_defect) + ")");
    if (!(min_eigenvalue >= -tol.psd))
      add("not positive semidefinite (min eigenvalue " + std::to_string(min_eigenvalue) + ")");
    if (!(partial_trace_defect <= tol.partial_trace))
      add("Tr_2 != I/d (max deviation " + std::to_string(partial_trace_defect) + ")");
    if (!(trace_defect <= tol.trace)) add("trace != 1 (deviation " + std::to_string(trace_defect) + ")");
    return out;
  }
};

inline ChoiReport inspect_choi(const CMatrix &m, int d) {
  const Eigen::Index n = static_cast<Eigen::Index>(d) * d;
  if (m.rows() != n || m.cols() != n) throw ShapeError("Choi matrix must be d^2 x d^2");
  ChoiReport r;
  r.hermitian_defect = hermitian_defect(m);
  r.min_eigenvalue = min_eigenvalue(m);
  const Operator reduced = partial_trace(hermitian_part(m), Subsystem::second, d, d);
  r.partial_trace_defect = max_abs(reduced - Operator::Identity(d, d) / static_cast<double>(d));
  r.trace_defect = std::abs(m.trace().real() - 1.0);
  return r;
}

// d^2 x d^2 Hermitian PSD matrix with Tr_2 = I/d.
class ChoiMatrix {
public:
  ChoiMatrix() = default;

  // Validates with `tol`; the stored matrix is the Hermitian part of `m`.
  ChoiMatrix(CMatrix m, int d, const ChoiTolerances &tol = {}) : dim_(d) {
    const ChoiReport report = inspect_choi(m, d);
    if (!report.passes(tol))
      throw ValidationError("invalid Choi matrix: " + report.describe_failure(tol));
    matrix_ = hermitian_part(m);
  }

  int dim() const noexcept { return dim_; }
  const CMatrix &matrix() const noexcept { return matrix_; }

private:
  int dim_ = 0;
  CMatrix matrix_;
};

// chi = sum_i (I (x) K_i) |phi><phi| (I (x) K_i)^dagger
inline ChoiMatrix choi_from_kraus(const KrausChannel &channel) {
  const int d = channel.dim();
  const auto report = kraus_completeness(d, channel.kraus());
  if (!(report.max_deviation <= tolerance::cptp))
    throw ValidationError("choi_from_kraus: channel is not trace preserving (max |sum K^dag K - I| = " +
                          std::to_string(report.max_deviation) + ")");
  const CVector phi = maximally_entangled(d).amplitudes();
  const Operator id = Operator::Identity(d, d);
  CMatrix chi = CMatrix::Zero(d * d, d * d);
  for (const auto &k : channel.kraus()) {
    const CVector v = tensor(id, k) * phi;
    chi.noalias() += v * v.adjoint();
  }
  return ChoiMatrix(std::move(chi), d);
}

// E(rho) = d Tr_1(chi (rho^T (x) I)), transpose in the computational basis.
inline Operator apply_channel(const ChoiMatrix &choi, const Operator &rho) {
  const int d = choi.dim();
  if (rho.rows() != d || rho.cols() != d) throw ShapeError("apply_channel: rho has wrong shape");
  const CMatrix prod = choi.matrix() * tensor(Operator(rho.transpose()), Operator::Identity(d, d));
  return static_cast<double>(d) * partial_trace(prod, Subsystem::first, d, d);
}

// Tr(chi |phi><phi|)
inline double process_fidelity(const ChoiMatrix &choi) {
  const CVector phi = maximally_entangled(choi.dim()).amplitudes();
  return clamp_fidelity(phi.dot(choi.matrix() * phi).real());
}

// conj(psi) (x) psi, so that psi^T-hat (x) psi-hat = v v^dagger.
inline CVector transpose_tensor_vector(const PureState &psi) {
  return tensor(CVector(psi.amplitudes().conjugate()), psi.amplitudes());
}

// <psi|E(psi-hat)|psi> = d Tr(chi (psi-hat^T (x) psi-hat))
inline double state_fidelity(const ChoiMatrix &choi, const PureState &psi) {
  if (psi.dim() != choi.dim()) throw ShapeError("state_fidelity: dimension mismatch");
  const CVector v = transpose_tensor_vector(psi);
  return clamp_fidelity(choi.dim() * v.dot(choi.matrix() * v).real());
}

inline double state_fidelity(const KrausChannel &channel, const PureState &psi) {
  if (psi.dim() != channel.dim()) throw ShapeError("state_fidelity: dimension mismatch");
  return clamp_fidelity(psi.amplitudes().dot(channel.apply(psi.projector()) * psi.amplitudes()).real());
}

// Frobenius distance between Choi matrices; the canonical channel-equality test.
inline double choi_distance(const ChoiMatrix &a, const ChoiMatrix &b) {
  if (a.dim() != b.dim()) throw ShapeError("choi_distance: dimension mismatch");
  return (a.matrix() - b.matrix()).norm();
}

} // namespace fidbound
