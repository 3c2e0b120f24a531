// Copyright 2026 The qtraj authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <qtraj/types.hpp>

namespace qtraj {

// ---------------------------------------------------------------------------
// Expression helpers
// ---------------------------------------------------------------------------

template <typename Derived>
double hermiticity_defect(const Eigen::MatrixBase<Derived>& m) {
  return (m - m.adjoint()).norm();
}

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& m, double tol) {
  return m.rows() == m.cols() && hermiticity_defect(m) <= tol;
}

template <typename DerivedA, typename DerivedB>
double frobenius_distance(const Eigen::MatrixBase<DerivedA>& a,
                          const Eigen::MatrixBase<DerivedB>& b) {
  return (a - b).norm();
}

/// (A + A^dag) / 2, evaluated.
template <typename Derived>
CMatrix hermitian_part(const Eigen::MatrixBase<Derived>& m) {
  return 0.5 * (m + m.adjoint());
}

/// Kronecker product a (x) b, with `a` the most significant factor.
template <typename DerivedA, typename DerivedB>
CMatrix kron(const Eigen::MatrixBase<DerivedA>& a,
             const Eigen::MatrixBase<DerivedB>& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Clamps a radicand that is nonnegative in exact arithmetic. Magnitudes at
/// or below the clamp threshold are numerically indistinguishable from zero
/// and collapse to exactly 0, so quantities that vanish identically do not
/// acquire sqrt-amplified rounding noise. Anything below the negative
/// threshold indicates a bug upstream rather than floating-point drift.
inline double clamp_radicand(double r) {
  if (r > tolerances().radicand_clamp) return r;
  if (r >= -tolerances().radicand_clamp) return 0.0;
  throw NumericalInconsistency("radicand " + std::to_string(r) +
                               " below clamp threshold");
}

// ---------------------------------------------------------------------------
// Spectral helpers
// ---------------------------------------------------------------------------

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and
/// an orthonormal column basis such that basis * diag * basis^dag == input.
struct SpectralDecomposition {
  RVector eigenvalues;
  CMatrix basis;
};

inline SpectralDecomposition hermitian_eig(const CMatrix& h) {
  if (h.rows() != h.cols())
    throw DimensionMismatch("hermitian_eig needs a square matrix");
  if (hermiticity_defect(h) > tolerances().spectral_input)
    throw NotHermitian("hermiticity defect " +
                       std::to_string(hermiticity_defect(h)));
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(h));
  if (solver.info() != Eigen::Success)
    throw NumericalInconsistency("hermitian eigensolver failed to converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// PSD square root. Eigenvalues in [-psd_floor, 0) are clamped to zero;
/// anything lower is rejected.
inline CMatrix psd_sqrt(const CMatrix& m) {
  const SpectralDecomposition sd = hermitian_eig(m);
  RVector lam = sd.eigenvalues;
  for (Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < -tolerances().psd_floor)
      throw NotPSD("min eigenvalue " + std::to_string(lam.minCoeff()));
    lam(i) = std::sqrt(std::max(lam(i), 0.0));
  }
  return hermitian_part(sd.basis * lam.asDiagonal() * sd.basis.adjoint());
}

/// Pseudo-inverse square root on the support: eigenvalues below the relative
/// rank cutoff map to zero instead of being inverted.
inline CMatrix psd_inv_sqrt(const CMatrix& m) {
  const SpectralDecomposition sd = hermitian_eig(m);
  RVector lam = sd.eigenvalues;
  const double cutoff =
      std::max(lam.maxCoeff(), 0.0) * tolerances().rank_svd_rel;
  for (Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < -tolerances().psd_floor)
      throw NotPSD("min eigenvalue " + std::to_string(lam.minCoeff()));
    lam(i) = lam(i) > cutoff ? 1.0 / std::sqrt(lam(i)) : 0.0;
  }
  return hermitian_part(sd.basis * lam.asDiagonal() * sd.basis.adjoint());
}

/// Projector onto the span of the eigenvectors whose eigenvalue exceeds the
/// relative cutoff. Used for support-inclusion checks.
inline CMatrix support_projector(const CMatrix& psd) {
  const SpectralDecomposition sd = hermitian_eig(psd);
  const double cutoff =
      std::max(sd.eigenvalues.maxCoeff(), 0.0) * tolerances().rank_svd_rel;
  CMatrix proj = CMatrix::Zero(psd.rows(), psd.cols());
  for (Index i = 0; i < sd.eigenvalues.size(); ++i)
    if (sd.eigenvalues(i) > cutoff)
      proj += sd.basis.col(i) * sd.basis.col(i).adjoint();
  return hermitian_part(proj);
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Validated density matrix: Hermitian, PSD and unit trace within the global
/// tolerances. The stored matrix is the Hermitian part of the input, so
/// purity/Lyapunov evaluations never see an anti-Hermitian residue.
class DensityMatrix {
 public:
  explicit DensityMatrix(CMatrix rho) : mat_(std::move(rho)) {
    const Tolerances& tol = tolerances();
    if (mat_.rows() != mat_.cols() || mat_.rows() < 1)
      throw DimensionMismatch("density matrix must be square and nonempty");
    const double herm = hermiticity_defect(mat_);
    if (herm > tol.hermitian)
      throw NotHermitian("hermiticity defect " + std::to_string(herm));
    mat_ = hermitian_part(mat_);
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(mat_, Eigen::EigenvaluesOnly);
    const double min_eig = solver.eigenvalues().minCoeff();
    if (min_eig < -tol.psd_floor)
      throw NotPSD("min eigenvalue " + std::to_string(min_eig));
    const double trace_defect = std::abs(mat_.trace() - Complex(1.0, 0.0));
    if (trace_defect > tol.trace_one)
      throw TraceNotOne("trace defect " + std::to_string(trace_defect));
  }

  const CMatrix& matrix() const { return mat_; }
  Index dim() const { return mat_.rows(); }

  static DensityMatrix maximally_mixed(Index d) {
    return DensityMatrix(CMatrix::Identity(d, d) / static_cast<double>(d));
  }

  static DensityMatrix pure(Index d, Index basis_index) {
    if (basis_index < 0 || basis_index >= d)
      throw DimensionMismatch("basis index out of range");
    CMatrix rho = CMatrix::Zero(d, d);
    rho(basis_index, basis_index) = Complex(1.0, 0.0);
    return DensityMatrix(std::move(rho));
  }

  static DensityMatrix from_vector(const CVector& psi) {
    const double norm = psi.norm();
    if (norm == 0.0) throw DimensionMismatch("zero state vector");
    const CVector unit = psi / norm;
    return DensityMatrix(unit * unit.adjoint());
  }

 private:
  CMatrix mat_;
};

inline DensityMatrix validate_density(const CMatrix& m) {
  return DensityMatrix(m);
}

inline double purity(const DensityMatrix& rho) {
  return rho.matrix().squaredNorm();
}

/// V(rho) = sqrt(1 - tr(rho^2)); zero exactly on pure states.
inline double lyapunov(const DensityMatrix& rho) {
  return std::sqrt(clamp_radicand(1.0 - purity(rho)));
}

/// Fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2. Symmetric in its
/// arguments up to eigensolver noise and bounded below by tr(rho sigma).
inline double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim())
    throw DimensionMismatch("fidelity of states with different dimensions");
  const CMatrix root = psd_sqrt(rho.matrix());
  const CMatrix inner = hermitian_part(root * sigma.matrix() * root);
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(inner, Eigen::EigenvaluesOnly);
  double sum = 0.0;
  for (Index i = 0; i < solver.eigenvalues().size(); ++i)
    sum += std::sqrt(std::max(solver.eigenvalues()(i), 0.0));
  return sum * sum;
}

/// Finite Kraus family {V_i} with the completeness relation
/// sum_i V_i^dag V_i = I. Outcomes are indexed in the order given; string
/// labels default to "0", "1", ...
class KrausChannel {
 public:
  explicit KrausChannel(std::vector<CMatrix> ops,
                        std::vector<std::string> labels = {})
      : ops_(std::move(ops)), labels_(std::move(labels)) {
    if (ops_.empty()) throw DimensionMismatch("channel needs >= 1 outcome");
    const Index d = ops_.front().rows();
    if (d < 1) throw DimensionMismatch("channel dimension must be >= 1");
    for (const CMatrix& v : ops_)
      if (v.rows() != d || v.cols() != d)
        throw DimensionMismatch("all Kraus operators must be d x d");
    if (labels_.empty()) {
      labels_.reserve(ops_.size());
      for (std::size_t i = 0; i < ops_.size(); ++i)
        labels_.push_back(std::to_string(i));
    } else if (labels_.size() != ops_.size()) {
      throw DimensionMismatch("label count does not match outcome count");
    }
    CMatrix sum = CMatrix::Zero(d, d);
    for (const CMatrix& v : ops_) sum += v.adjoint() * v;
    const double defect = frobenius_distance(sum, CMatrix::Identity(d, d));
    if (defect > tolerances().completeness)
      throw CompletenessViolation("completeness defect " +
                                  std::to_string(defect));
  }

  Index dim() const { return ops_.front().rows(); }
  std::size_t outcome_count() const { return ops_.size(); }
  const CMatrix& op(std::size_t i) const { return ops_.at(i); }
  const std::vector<CMatrix>& ops() const { return ops_; }
  const std::vector<std::string>& labels() const { return labels_; }

  Outcome label_index(const std::string& label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (labels_[i] == label) return static_cast<Outcome>(i);
    throw UnknownOutcomeLabel("no outcome labelled '" + label + "'");
  }

 private:
  std::vector<CMatrix> ops_;
  std::vector<std::string> labels_;
};

/// Orthogonal projector with integer rank.
class Projector {
 public:
  explicit Projector(CMatrix pi) : mat_(std::move(pi)) {
    const Tolerances& tol = tolerances();
    if (mat_.rows() != mat_.cols())
      throw DimensionMismatch("projector must be square");
    if (hermiticity_defect(mat_) > tol.projector)
      throw NotHermitian("projector hermiticity defect");
    const double idem = frobenius_distance(mat_ * mat_, mat_);
    if (idem > tol.projector)
      throw NumericalInconsistency("idempotence defect " +
                                   std::to_string(idem));
    const double trace = mat_.trace().real();
    rank_ = static_cast<Index>(std::llround(trace));
    if (std::abs(trace - static_cast<double>(rank_)) > tol.projector ||
        rank_ < 0)
      throw NumericalInconsistency("projector trace " + std::to_string(trace) +
                                   " is not an integer rank");
    mat_ = hermitian_part(mat_);
  }

  /// Builds F F^dag from a d x r frame with orthonormal columns.
  static Projector from_frame(const CMatrix& frame) {
    const double defect = frobenius_distance(
        frame.adjoint() * frame, CMatrix::Identity(frame.cols(), frame.cols()));
    if (defect > tolerances().spectral_input)
      throw NotOrthonormal("frame gram defect " + std::to_string(defect));
    return Projector(frame * frame.adjoint());
  }

  const CMatrix& matrix() const { return mat_; }
  Index dim() const { return mat_.rows(); }
  Index rank() const { return rank_; }

  /// d x rank frame spanning the range (eigenvectors with eigenvalue ~ 1).
  CMatrix frame() const {
    const SpectralDecomposition sd = hermitian_eig(mat_);
    CMatrix f(dim(), rank_);
    Index col = 0;
    for (Index i = 0; i < sd.eigenvalues.size(); ++i)
      if (sd.eigenvalues(i) > 0.5) f.col(col++) = sd.basis.col(i);
    if (col != rank_)
      throw NumericalInconsistency("projector spectrum inconsistent with rank");
    return f;
  }

 private:
  CMatrix mat_;
  Index rank_ = 0;
};

// ---------------------------------------------------------------------------
// Words of outcomes
// ---------------------------------------------------------------------------

/// Measurement record (i_1, ..., i_n), chronological: i_1 happened first.
using MeasurementRecord = std::vector<Outcome>;

/// V_I = V_{i_p} ... V_{i_1} (chronological product; the first outcome acts
/// first) together with M_I = V_I^dag V_I. Summed over all words of a fixed
/// length the M_I telescope back to the identity.
struct WordOperator {
  CMatrix word;    // V_I
  CMatrix moment;  // M_I = V_I^dag V_I
};

inline WordOperator word_operator(const KrausChannel& ch,
                                  const MeasurementRecord& record) {
  const Index d = ch.dim();
  CMatrix v = CMatrix::Identity(d, d);
  for (Outcome i : record) {
    if (i < 0 || static_cast<std::size_t>(i) >= ch.outcome_count())
      throw UnknownOutcomeLabel("outcome index " + std::to_string(i) +
                                " out of range");
    v = ch.op(static_cast<std::size_t>(i)) * v;
  }
  return {v, hermitian_part(v.adjoint() * v)};
}

/// Number of words of the given length, guarded against overflow and the cap.
inline std::uint64_t word_space_size(std::size_t outcomes, int length,
                                     std::uint64_t cap = kDefaultWordCap) {
  std::uint64_t total = 1;
  for (int k = 0; k < length; ++k) {
    if (total > cap / std::max<std::uint64_t>(outcomes, 1))
      throw EnumerationTooLarge("|O|^" + std::to_string(length) +
                                " exceeds the word cap");
    total *= outcomes;
  }
  if (total > cap)
    throw EnumerationTooLarge("|O|^" + std::to_string(length) +
                              " exceeds the word cap");
  return total;
}

namespace detail {

template <typename Visitor>
void visit_words(const KrausChannel& ch, int remaining, MeasurementRecord& word,
                 std::vector<CMatrix>& products, Visitor& visit,
                 double prune_trace) {
  const CMatrix& current = products.back();
  if (remaining == 0) {
    visit(static_cast<const MeasurementRecord&>(word), current);
    return;
  }
  for (std::size_t i = 0; i < ch.outcome_count(); ++i) {
    CMatrix next = ch.op(i) * current;
    if (prune_trace > 0.0 && next.squaredNorm() <= prune_trace) continue;
    word.push_back(static_cast<Outcome>(i));
    products.push_back(std::move(next));
    visit_words(ch, remaining - 1, word, products, visit, prune_trace);
    products.pop_back();
    word.pop_back();
  }
}

}  // namespace detail

/// Visits every word of the given length in lexicographic order, passing
/// (record, V_record). Subtrees whose partial product has tr(V^dag V) at or
/// below prune_trace are skipped; 0 disables pruning.
template <typename Visitor>
void for_each_word(const KrausChannel& ch, int length, Visitor&& visit,
                   double prune_trace = 0.0) {
  MeasurementRecord word;
  word.reserve(static_cast<std::size_t>(length));
  std::vector<CMatrix> products;
  products.reserve(static_cast<std::size_t>(length) + 1);
  products.push_back(CMatrix::Identity(ch.dim(), ch.dim()));
  detail::visit_words(ch, length, word, products, visit, prune_trace);
}

}  // namespace qtraj
