#pragma once

#include <cmath>
#include <string_view>
#include <utility>
#include <vector>

#include "chx/basis.hpp"
#include "chx/error.hpp"
#include "chx/linalg.hpp"

namespace chx {

enum class Picture { heisenberg, schrodinger };

constexpr std::string_view to_string(Picture p) {
  return p == Picture::heisenberg ? "heisenberg" : "schrodinger";
}

constexpr Picture opposite(Picture p) {
  return p == Picture::heisenberg ? Picture::schrodinger : Picture::heisenberg;
}

/// Default positivity tolerance, relative to ||xi||_F.
inline constexpr double kPositivityTolerance = 1e-9;

/// A linear map on M_d stored as its superoperator matrix
/// D_ij = tr((A^i)^* T(A_j)) in a fixed operator basis. Heisenberg maps act
/// on observables, Schrodinger maps on states.
class Channel {
 public:
  Channel(BasisPtr basis, Picture picture, Matrix matrix)
      : basis_(std::move(basis)), picture_(picture), matrix_(std::move(matrix)) {
    if (!basis_) throw Error(ErrorCode::invalid_basis, "channel needs a basis");
    const int n = basis_->size();
    if (matrix_.rows() != n || matrix_.cols() != n)
      throw Error(ErrorCode::dimension_mismatch, "superoperator matrix must be d^2 x d^2");
    if (!all_finite(matrix_)) throw Error(ErrorCode::invalid_channel, "superoperator has non-finite entries");
  }

  /// From the matrix L acting on row-major vec(X).
  static Channel from_natural(BasisPtr basis, Picture picture, const Matrix& natural) {
    Matrix d = basis->to_coordinates() * natural * basis->from_coordinates();
    return Channel(std::move(basis), picture, std::move(d));
  }

  int dim() const noexcept { return basis_->dim(); }
  Picture picture() const noexcept { return picture_; }
  const BasisPtr& basis() const noexcept { return basis_; }
  const Matrix& matrix() const noexcept { return matrix_; }

  /// The same map as a matrix on row-major vec(X).
  Matrix natural() const { return basis_->from_coordinates() * matrix_ * basis_->to_coordinates(); }

  Matrix apply(const Matrix& x) const {
    if (x.rows() != dim() || x.cols() != dim())
      throw Error(ErrorCode::dimension_mismatch, "operator dimension does not match channel");
    return basis_->operator_from(matrix_ * basis_->coordinates(x));
  }

  Channel in_basis(BasisPtr target) const {
    if (target->dim() != dim()) throw Error(ErrorCode::dimension_mismatch, "basis dimension mismatch");
    return from_natural(std::move(target), picture_, natural());
  }

 private:
  BasisPtr basis_;
  Picture picture_;
  Matrix matrix_;
};

/// Kraus operators of T(X) = sum_a K_a^* X K_a. The two normalisations of
/// this form are recorded separately: sum K K^* = 1 (trace preservation of
/// T, as written next to the decomposition) and sum K^* K = 1 (unitality).
class KrausSet {
 public:
  static constexpr double kTolerance = 1e-9;

  explicit KrausSet(std::vector<Matrix> operators) : operators_(std::move(operators)) {
    if (operators_.empty()) throw Error(ErrorCode::invalid_channel, "Kraus set is empty");
    const auto d = operators_.front().rows();
    if (d < 1) throw Error(ErrorCode::invalid_dimension, "Kraus operators must be non-empty");
    for (const auto& k : operators_)
      if (k.rows() != d || k.cols() != d)
        throw Error(ErrorCode::dimension_mismatch, "Kraus operators must be square and of equal size");
    Matrix kk = Matrix::Zero(d, d), kdk = Matrix::Zero(d, d);
    for (const auto& k : operators_) {
      kk += k * k.adjoint();
      kdk += k.adjoint() * k;
    }
    trace_preserving_ = (kk - identity(d)).norm() <= kTolerance * static_cast<double>(d);
    unital_ = (kdk - identity(d)).norm() <= kTolerance * static_cast<double>(d);
  }

  int dim() const noexcept { return static_cast<int>(operators_.front().rows()); }
  std::size_t size() const noexcept { return operators_.size(); }
  const std::vector<Matrix>& operators() const noexcept { return operators_; }
  const Matrix& operator[](std::size_t i) const { return operators_.at(i); }

  /// sum K K^* = 1.
  bool sums_to_identity_kkdag() const noexcept { return trace_preserving_; }
  /// sum K^* K = 1.
  bool sums_to_identity_kdagk() const noexcept { return unital_; }

  Matrix apply(const Matrix& x) const {
    Matrix out = Matrix::Zero(x.rows(), x.cols());
    for (const auto& k : operators_) out += k.adjoint() * x * k;
    return out;
  }

 private:
  std::vector<Matrix> operators_;
  bool trace_preserving_ = false;
  bool unital_ = false;
};

enum class ChoiNormalization { operator_form, state_form };

/// xi = (1/d) sum_ij T(|i><j|) (x) |i><j| of the stored map. For a
/// Heisenberg channel this is the Choi operator xi_T, for a Schrodinger
/// channel the Choi state xi_{T*}.
struct ChoiOperator {
  int dim = 0;
  Matrix matrix;
  ChoiNormalization normalization = ChoiNormalization::operator_form;
};

inline Channel kraus_to_channel(const KrausSet& kraus, BasisPtr basis) {
  if (kraus.dim() != basis->dim())
    throw Error(ErrorCode::dimension_mismatch, "Kraus operators and basis differ in dimension");
  const int d = kraus.dim();
  Matrix natural = Matrix::Zero(d * d, d * d);
  for (const auto& k : kraus.operators()) natural += kron(k.adjoint(), k.transpose());
  return Channel::from_natural(std::move(basis), Picture::heisenberg, natural);
}

inline ChoiOperator channel_to_choi(const Channel& t) {
  const int d = t.dim();
  const Matrix l = t.natural();
  Matrix xi(d * d, d * d);
  for (int n = 0; n < d; ++n)
    for (int m = 0; m < d; ++m)
      for (int k = 0; k < d; ++k)
        for (int j = 0; j < d; ++j) xi(n * d + k, m * d + j) = l(n * d + m, k * d + j) / static_cast<double>(d);
  return {d, std::move(xi),
          t.picture() == Picture::heisenberg ? ChoiNormalization::operator_form : ChoiNormalization::state_form};
}

inline Channel choi_to_channel(const ChoiOperator& choi, BasisPtr basis) {
  const int d = choi.dim;
  if (choi.matrix.rows() != d * d || choi.matrix.cols() != d * d || basis->dim() != d)
    throw Error(ErrorCode::dimension_mismatch, "Choi operator must be d^2 x d^2");
  Matrix l(d * d, d * d);
  for (int n = 0; n < d; ++n)
    for (int m = 0; m < d; ++m)
      for (int k = 0; k < d; ++k)
        for (int j = 0; j < d; ++j) l(n * d + m, k * d + j) = static_cast<double>(d) * choi.matrix(n * d + k, m * d + j);
  const Picture p =
      choi.normalization == ChoiNormalization::operator_form ? Picture::heisenberg : Picture::schrodinger;
  return Channel::from_natural(std::move(basis), p, l);
}

/// Minimal Kraus set from the eigendecomposition of xi; the Kraus rank is
/// the number of eigenvalues above `tol`.
inline KrausSet choi_to_kraus(const ChoiOperator& choi, double tol = 1e-9) {
  const int d = choi.dim;
  if (!is_hermitian(choi.matrix, 1e-9))
    throw Error(ErrorCode::invalid_channel, "Choi operator is not Hermitian");
  const auto eig = hermitian_eigen(choi.matrix);
  if (eig.values(0) < -tol)
    throw Error(ErrorCode::not_completely_positive,
                "Choi operator has eigenvalue " + std::to_string(eig.values(0)));
  std::vector<Matrix> ops;
  for (Eigen::Index e = eig.values.size() - 1; e >= 0; --e) {
    const double lambda = eig.values(e);
    if (lambda <= tol) break;
    const double w = std::sqrt(lambda * d);
    Matrix kdag(d, d);
    for (int a = 0; a < d; ++a)
      for (int i = 0; i < d; ++i) kdag(a, i) = w * eig.vectors(a * d + i, e);
    ops.push_back(kdag.adjoint());
  }
  if (ops.empty()) throw Error(ErrorCode::invalid_channel, "Choi operator is zero");
  return KrausSet(std::move(ops));
}

struct PositivityReport {
  bool completely_positive = false;
  double min_eigenvalue = 0.0;
};

/// Choi positivity with a scale-invariant tolerance: lambda_min >= -tol * ||xi||_F.
inline PositivityReport is_completely_positive(const Channel& t, double tol = kPositivityTolerance) {
  const auto choi = channel_to_choi(t);
  const double lambda = min_eigenvalue(choi.matrix);
  return {lambda >= -tol * choi.matrix.norm(), lambda};
}

struct StructuralFlags {
  bool unital = false;            // T(1) = 1
  bool trace_preserving = false;  // tr T(X) = tr X, i.e. the dual map is unital
};

inline StructuralFlags structural_predicates(const Channel& t, double tol = 1e-9) {
  const int d = t.dim();
  const Matrix l = t.natural();
  const Vector one = vec(identity(d));
  const double scale = std::max(1.0, l.norm());
  StructuralFlags flags;
  flags.unital = (l * one - one).norm() <= tol * scale;
  flags.trace_preserving = (l.transpose() * one - one).norm() <= tol * scale;
  return flags;
}

inline Channel identity_channel(BasisPtr basis, Picture picture = Picture::heisenberg) {
  const int n = basis->size();
  return Channel(std::move(basis), picture, Matrix::Identity(n, n));
}

/// Heisenberg CDC T_sigma(A) = tr(sigma A) 1.
inline Channel cdc_channel(const Matrix& sigma, BasisPtr basis, double tol = 1e-9) {
  if (sigma.rows() != basis->dim()) throw Error(ErrorCode::dimension_mismatch, "sigma dimension mismatch");
  if (!is_density_matrix(sigma, tol)) throw Error(ErrorCode::not_a_state, "sigma is not a density matrix");
  const int d = basis->dim();
  const Matrix l = vec(identity(d)) * vec(sigma.transpose()).transpose();
  return Channel::from_natural(std::move(basis), Picture::heisenberg, l);
}

/// T(X) = tr(X) 1/d; identical in both pictures.
inline Channel bistochastic_cdc(BasisPtr basis, Picture picture = Picture::heisenberg) {
  const int d = basis->dim();
  if (basis->identity_first() && basis->traceless_tail()) {
    // Exact projector onto the identity coordinate; avoids round-off from
    // strongly rescaled tails.
    Matrix e = Matrix::Zero(d * d, d * d);
    e(0, 0) = 1.0;
    return Channel(std::move(basis), picture, std::move(e));
  }
  const Matrix l = vec(identity(d)) * vec(identity(d)).transpose() / static_cast<double>(d);
  return Channel::from_natural(std::move(basis), picture, l);
}

inline void require_compatible(const Channel& s, const Channel& t) {
  if (s.dim() != t.dim()) throw Error(ErrorCode::dimension_mismatch, "channels differ in dimension");
  if (s.picture() != t.picture()) throw Error(ErrorCode::picture_mismatch, "channels are in different pictures");
  if (!s.basis()->same_as(*t.basis())) throw Error(ErrorCode::basis_mismatch, "channels use different bases");
}

/// "t first, then s" in the stored picture.
inline Channel compose(const Channel& s, const Channel& t) {
  require_compatible(s, t);
  return Channel(s.basis(), s.picture(), s.matrix() * t.matrix());
}

/// t applied k times; power(t, 0) is the identity map.
inline Channel power(const Channel& t, int k) {
  if (k < 0) throw Error(ErrorCode::invalid_dimension, "power needs k >= 0");
  return Channel(t.basis(), t.picture(), matrix_power(t.matrix(), k));
}

/// The map T* with tr(T*(rho) A) = tr(rho T(A)), in the opposite picture.
inline Channel picture_dual(const Channel& t) {
  const int d = t.dim();
  const Matrix l = t.natural();
  // vec(X^T) = S vec(X); the dual's natural matrix is S L^T S.
  Matrix dual(d * d, d * d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e) dual(a * d + b, c * d + e) = l(e * d + c, b * d + a);
  return Channel::from_natural(t.basis(), opposite(t.picture()), dual);
}

inline double frobenius_distance(const Channel& s, const Channel& t) {
  require_compatible(s, t);
  return (s.matrix() - t.matrix()).norm();
}

}  // namespace chx
