#ifndef DSMREG_OPERATOR_CORE_HPP
#define DSMREG_OPERATOR_CORE_HPP

// Forward operator A, the normal system B = A^T A, F = A^T f, its
// eigendecomposition and the Tikhonov solve (B + eps I)^{-1} F.
//
// Everything here is templated on the scalar type; the rest of the library
// instantiates it with double.

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "dsmreg/types.hpp"

namespace dsmreg {

template <typename Scalar>
struct OperatorTolerances {
  static constexpr Scalar norm_bound = Scalar(1e-10);
  static constexpr Scalar symmetry = Scalar(1e-12);
  static constexpr Scalar psd = Scalar(1e-12);
  static constexpr Scalar algebraic = Scalar(1e-10);
};

/// Dense forward map A together with a certified bound ||A|| <= sqrt(m).
///
/// The singular values are computed once on construction. A is required to
/// be injective (no zero singular value, rows >= cols); in floating point
/// this only rules out exact rank deficiency, severe ill-conditioning is the
/// expected regime.
template <typename Scalar = double>
class DenseOperator {
 public:
  using MatrixType = MatrixX<Scalar>;
  using VectorType = VectorX<Scalar>;

  explicit DenseOperator(MatrixType entries,
                         std::optional<Scalar> norm_bound_sq = std::nullopt)
      : entries_(std::move(entries)) {
    if (entries_.size() == 0) throw std::invalid_argument("DenseOperator: empty matrix");
    if (!entries_.allFinite()) throw std::invalid_argument("DenseOperator: non-finite entry");
    if (entries_.rows() < entries_.cols())
      throw std::invalid_argument("DenseOperator: rows < cols, operator cannot be injective");

    singular_values_ = compute_singular_values(entries_);
    const Scalar smax = singular_values_(0);
    const Scalar smin = singular_values_(singular_values_.size() - 1);
    if (!(smin > Scalar(0)))
      throw std::invalid_argument("DenseOperator: zero singular value, operator is not injective");

    if (norm_bound_sq) {
      if (!(*norm_bound_sq > Scalar(0)))
        throw std::invalid_argument("DenseOperator: norm_bound_sq must be positive");
      using std::sqrt;
      if (smax > sqrt(*norm_bound_sq) * (Scalar(1) + OperatorTolerances<Scalar>::norm_bound))
        throw std::invalid_argument("DenseOperator: ||A|| exceeds sqrt(norm_bound_sq)");
      norm_bound_sq_ = *norm_bound_sq;
    } else {
      norm_bound_sq_ = smax * smax;
    }
  }

  const MatrixType& entries() const { return entries_; }
  Eigen::Index rows() const { return entries_.rows(); }
  Eigen::Index cols() const { return entries_.cols(); }

  /// The constant m with ||A|| <= sqrt(m).
  Scalar norm_bound_sq() const { return norm_bound_sq_; }
  Scalar norm_bound() const {
    using std::sqrt;
    return sqrt(norm_bound_sq_);
  }

  /// Descending.
  const VectorType& singular_values() const { return singular_values_; }
  Scalar largest_singular_value() const { return singular_values_(0); }
  Scalar smallest_singular_value() const {
    return singular_values_(singular_values_.size() - 1);
  }
  Scalar condition_number() const {
    return largest_singular_value() / smallest_singular_value();
  }

  VectorType apply(const VectorType& x) const { return entries_ * x; }
  VectorType apply_adjoint(const VectorType& f) const { return entries_.transpose() * f; }

 private:
  static VectorType compute_singular_values(const MatrixType& a) {
    if (a.cols() <= 64) {
      Eigen::JacobiSVD<MatrixType> svd(a);
      return svd.singularValues();
    }
    Eigen::BDCSVD<MatrixType> svd(a);
    return svd.singularValues();
  }

  MatrixType entries_;
  Scalar norm_bound_sq_{};
  VectorType singular_values_;
};

/// Normal-equation data B = A^T A, rhs = A^T f_delta.
template <typename Scalar = double>
struct NormalSystem {
  using MatrixType = MatrixX<Scalar>;
  using VectorType = VectorX<Scalar>;

  MatrixType b_matrix;
  VectorType rhs;
  std::optional<VectorType> rhs_clean;
  Scalar data_norm{};       // ||f_delta||
  Scalar noise_level{};     // delta
  Scalar norm_bound_sq{};   // m of the originating operator

  Eigen::Index size() const { return b_matrix.rows(); }
  /// sqrt(m): the constant c of ||A^T (f_delta - f)|| <= c delta.
  Scalar noise_gain() const {
    using std::sqrt;
    return sqrt(norm_bound_sq);
  }
};

/// Thrown when a constructed object violates one of its numerical invariants.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
void check_invariants(const NormalSystem<Scalar>& sys) {
  using std::abs;
  using std::sqrt;
  const auto& b = sys.b_matrix;
  if (b.rows() != b.cols()) throw InvariantViolation("NormalSystem: B not square");
  if (sys.rhs.size() != b.rows()) throw InvariantViolation("NormalSystem: rhs length mismatch");
  const Scalar bnorm = b.norm();
  if ((b - b.transpose()).norm() > OperatorTolerances<Scalar>::symmetry * bnorm)
    throw InvariantViolation("NormalSystem: B not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(b, Eigen::EigenvaluesOnly);
  const Scalar lmin = es.eigenvalues()(0);
  const Scalar lmax = es.eigenvalues()(b.rows() - 1);
  if (lmin < -OperatorTolerances<Scalar>::psd * lmax)
    throw InvariantViolation("NormalSystem: B not positive semidefinite");
  if (lmax > sys.norm_bound_sq * (Scalar(1) + Scalar(2) * OperatorTolerances<Scalar>::norm_bound))
    throw InvariantViolation("NormalSystem: ||B|| exceeds m");
  if (sys.rhs_clean) {
    const Scalar gap = (sys.rhs - *sys.rhs_clean).norm();
    if (gap > sys.noise_gain() * sys.noise_level * (Scalar(1) + Scalar(1e-10)) +
                  Scalar(1e-14) * sys.rhs.norm())
      throw InvariantViolation("NormalSystem: ||F_delta - F|| exceeds sqrt(m) delta");
  }
}

/// B = A^T A (exactly symmetric), rhs = A^T f_data, rhs_clean = A^T f_clean.
template <typename Scalar>
NormalSystem<Scalar> build_normal_system(
    const DenseOperator<Scalar>& op, const VectorX<Scalar>& f_data,
    const std::optional<VectorX<Scalar>>& f_clean = std::nullopt, Scalar delta = Scalar(0)) {
  if (f_data.size() != op.rows())
    throw std::invalid_argument("build_normal_system: data length != rows of A");
  if (!f_data.allFinite()) throw std::invalid_argument("build_normal_system: non-finite data");
  if (!(delta >= Scalar(0))) throw std::invalid_argument("build_normal_system: delta must be >= 0");
  if (f_clean) {
    if (f_clean->size() != op.rows())
      throw std::invalid_argument("build_normal_system: clean data length != rows of A");
    // Rounding of f_clean + noise is relative to ||f||, not to delta.
    const Scalar slack = Scalar(16) * std::numeric_limits<Scalar>::epsilon() *
                         std::sqrt(Scalar(op.rows())) * f_clean->cwiseAbs().maxCoeff();
    if ((f_data - *f_clean).norm() > delta * (Scalar(1) + Scalar(1e-12)) + slack)
      throw std::invalid_argument("build_normal_system: ||f_data - f_clean|| exceeds delta");
  }

  const auto& a = op.entries();
  NormalSystem<Scalar> sys;
  const Eigen::Index n = a.cols();
  MatrixX<Scalar> lower = MatrixX<Scalar>::Zero(n, n);
  lower.template selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
  sys.b_matrix = lower.template selfadjointView<Eigen::Lower>();
  sys.rhs = a.transpose() * f_data;
  if (f_clean) sys.rhs_clean = VectorX<Scalar>(a.transpose() * *f_clean);
  sys.data_norm = f_data.norm();
  sys.noise_level = delta;
  sys.norm_bound_sq = op.norm_bound_sq();
  check_invariants(sys);
  return sys;
}

/// w = (B + eps I)^{-1} rhs by Cholesky of the SPD shifted matrix, with one
/// step of iterative refinement.
template <typename Scalar>
VectorX<Scalar> tikhonov_solve(const MatrixX<Scalar>& b, const VectorX<Scalar>& rhs, Scalar eps) {
  if (!(eps > Scalar(0))) throw std::domain_error("tikhonov_solve: eps must be positive");
  if (!b.allFinite() || !rhs.allFinite())
    throw std::invalid_argument("tikhonov_solve: non-finite input");
  if (rhs.size() != b.rows()) throw std::invalid_argument("tikhonov_solve: size mismatch");
  MatrixX<Scalar> shifted = b;
  shifted.diagonal().array() += eps;
  Eigen::LLT<MatrixX<Scalar>> llt(shifted);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("tikhonov_solve: Cholesky breakdown (B + eps I not SPD)");
  VectorX<Scalar> w = llt.solve(rhs);
  w += llt.solve(VectorX<Scalar>(rhs - shifted * w));
  if (!w.allFinite()) throw std::runtime_error("tikhonov_solve: non-finite solution");
  return w;
}

template <typename Scalar>
VectorX<Scalar> tikhonov_solve(const NormalSystem<Scalar>& sys, Scalar eps) {
  return tikhonov_solve(sys.b_matrix, sys.rhs, eps);
}

/// Eigendecomposition B = V diag(lambda) V^T, eigenvalues ascending.
///
/// Eigenvalues below zero are rounding noise on a PSD matrix and are clamped
/// to zero; the raw minimum is kept for diagnostics.
template <typename Scalar = double>
struct SpectralDecomposition {
  VectorX<Scalar> eigenvalues;
  MatrixX<Scalar> eigenvectors;
  Scalar raw_min_eigenvalue{};

  Eigen::Index size() const { return eigenvalues.size(); }
  Scalar norm() const { return eigenvalues(eigenvalues.size() - 1); }

  VectorX<Scalar> to_spectral(const VectorX<Scalar>& x) const { return eigenvectors.transpose() * x; }
  VectorX<Scalar> from_spectral(const VectorX<Scalar>& c) const { return eigenvectors * c; }

  /// V diag(fn(lambda)) V^T x.
  template <typename Fn>
  VectorX<Scalar> apply(const VectorX<Scalar>& x, Fn fn) const {
    VectorX<Scalar> c = to_spectral(x);
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= fn(eigenvalues(i));
    return from_spectral(c);
  }

  MatrixX<Scalar> reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  }
};

template <typename Scalar>
SpectralDecomposition<Scalar> spectral_decompose(const MatrixX<Scalar>& b) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(b);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spectral_decompose: eigensolver did not converge");
  SpectralDecomposition<Scalar> d;
  d.raw_min_eigenvalue = es.eigenvalues()(0);
  d.eigenvalues = es.eigenvalues().cwiseMax(Scalar(0));
  d.eigenvectors = es.eigenvectors();
  return d;
}

template <typename Scalar>
SpectralDecomposition<Scalar> spectral_decompose(const NormalSystem<Scalar>& sys) {
  return spectral_decompose(sys.b_matrix);
}

template <typename Scalar>
struct CommutationCheck {
  Scalar residual{};
  bool half_power_ok{};
  Scalar half_power_norm{};   // ||(B + eps I)^{-1} A^T f||
  Scalar half_power_bound{};  // ||f|| / (2 sqrt(eps))
};

/// Evaluates A (A^T A + eps I)^{-1} A^T f against (A A^T + eps I)^{-1} A A^T f
/// and the bound ||(B + eps I)^{-1} A^T f|| <= ||f|| / (2 sqrt(eps)).
template <typename Scalar>
CommutationCheck<Scalar> commutation_residual(const DenseOperator<Scalar>& op,
                                              const VectorX<Scalar>& f, Scalar eps) {
  if (f.size() != op.rows()) throw std::invalid_argument("commutation_residual: size mismatch");
  if (!(eps > Scalar(0))) throw std::domain_error("commutation_residual: eps must be positive");
  using std::sqrt;
  const auto& a = op.entries();
  const VectorX<Scalar> atf = a.transpose() * f;
  const MatrixX<Scalar> gram_cols = a.transpose() * a;
  const MatrixX<Scalar> gram_rows = a * a.transpose();

  const VectorX<Scalar> v = tikhonov_solve(gram_cols, atf, eps);
  const VectorX<Scalar> left = a * v;
  const VectorX<Scalar> right = tikhonov_solve(gram_rows, VectorX<Scalar>(gram_rows * f), eps);

  CommutationCheck<Scalar> out;
  out.residual = (left - right).norm();
  out.half_power_norm = v.norm();
  out.half_power_bound = f.norm() / (Scalar(2) * sqrt(eps));
  out.half_power_ok =
      out.half_power_norm <= out.half_power_bound * (Scalar(1) + OperatorTolerances<Scalar>::algebraic);
  return out;
}

}  // namespace dsmreg

#endif  // DSMREG_OPERATOR_CORE_HPP
