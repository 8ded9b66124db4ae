#pragma once

#include <cmath>
#include <memory>
#include <string_view>
#include <utility>
#include <vector>

#include "chx/error.hpp"
#include "chx/linalg.hpp"

namespace chx {

enum class BasisKind { gellmann, matrix_unit, custom };

constexpr std::string_view to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::gellmann: return "gellmann";
    case BasisKind::matrix_unit: return "matrix-unit";
    case BasisKind::custom: return "custom";
  }
  return "custom";
}

/// A basis A_1..A_{d^2} of M_d together with its dual basis A^1..A^{d^2}
/// under the Hilbert-Schmidt pairing, tr((A^j)^* A_i) = delta_ij.
///
/// Superoperator matrices are expressed in this basis as
/// D_ij = tr((A^i)^* T(A_j)), which in vec form is D = Q^H L P with P the
/// columns vec(A_j) and Q^H the rows vec(A^i)^H (so Q^H = P^{-1}).
class OperatorBasis {
 public:
  static constexpr double kTolerance = 1e-10;

  /// Builds a basis from its elements; duals come from the inverse Gram
  /// matrix (Jacobi-preconditioned so strongly rescaled bases stay accurate).
  static std::shared_ptr<const OperatorBasis> from_elements(std::vector<Matrix> elements,
                                                            BasisKind kind = BasisKind::custom) {
    const auto n = static_cast<Eigen::Index>(elements.size());
    const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    if (d < 1 || static_cast<Eigen::Index>(d) * d != n)
      throw Error(ErrorCode::invalid_basis, "basis must have d^2 elements");
    for (const auto& a : elements)
      if (a.rows() != d || a.cols() != d || !all_finite(a))
        throw Error(ErrorCode::invalid_basis, "basis elements must be finite d x d matrices");

    Matrix gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        gram(i, j) = (elements[i].adjoint() * elements[j]).trace();
    RealVector scale(n);
    for (Eigen::Index i = 0; i < n; ++i) scale(i) = std::sqrt(std::abs(gram(i, i).real()));
    if ((scale.array() <= 0.0).any())
      throw Error(ErrorCode::invalid_basis, "basis contains a zero element");
    const Matrix normalized = scale.cwiseInverse().asDiagonal() * gram * scale.cwiseInverse().asDiagonal();
    Eigen::FullPivLU<Matrix> lu(normalized);
    if (!lu.isInvertible() || lu.rcond() < 1e-13)
      throw Error(ErrorCode::invalid_basis, "basis elements are linearly dependent");
    const Matrix inv = scale.cwiseInverse().asDiagonal() * lu.inverse() * scale.cwiseInverse().asDiagonal();

    std::vector<Matrix> duals(static_cast<std::size_t>(n), Matrix::Zero(d, d));
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k) duals[j] += inv(k, j) * elements[k];
    return from_elements_and_duals(std::move(elements), std::move(duals), kind);
  }

  /// Builds a basis whose duals are known analytically; the pairing is
  /// verified, relative to the element and dual norms.
  static std::shared_ptr<const OperatorBasis> from_elements_and_duals(std::vector<Matrix> elements,
                                                                      std::vector<Matrix> duals,
                                                                      BasisKind kind = BasisKind::custom) {
    const auto n = static_cast<Eigen::Index>(elements.size());
    const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    if (static_cast<Eigen::Index>(duals.size()) != n || static_cast<Eigen::Index>(d) * d != n)
      throw Error(ErrorCode::invalid_basis, "element and dual counts must both be d^2");

    Matrix from(n, n), to(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (elements[j].rows() != d || duals[j].rows() != d || elements[j].cols() != d || duals[j].cols() != d)
        throw Error(ErrorCode::invalid_basis, "basis elements must be d x d");
      from.col(j) = vec(elements[j]);
      to.row(j) = vec(duals[j]).adjoint();
    }
    const Matrix pairing = to * from;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double scale = std::max(1.0, elements[j].norm() * duals[i].norm());
        const Complex expected = (i == j) ? 1.0 : 0.0;
        if (std::abs(pairing(i, j) - expected) > kTolerance * scale)
          throw Error(ErrorCode::invalid_basis, "dual pairing tr((A^j)^* A_i) != delta_ij");
      }
    return std::shared_ptr<const OperatorBasis>(
        new OperatorBasis(d, kind, std::move(elements), std::move(duals), std::move(from), std::move(to)));
  }

  int dim() const noexcept { return d_; }
  int size() const noexcept { return d_ * d_; }
  BasisKind kind() const noexcept { return kind_; }
  const std::vector<Matrix>& elements() const noexcept { return elements_; }
  const std::vector<Matrix>& duals() const noexcept { return duals_; }
  const Matrix& element(int i) const { return elements_.at(static_cast<std::size_t>(i)); }
  const Matrix& dual(int i) const { return duals_.at(static_cast<std::size_t>(i)); }

  /// P: column j is vec(A_j).
  const Matrix& from_coordinates() const noexcept { return from_; }
  /// Q^H = P^{-1}: row i is vec(A^i)^H.
  const Matrix& to_coordinates() const noexcept { return to_; }

  Vector coordinates(const Matrix& x) const { return to_ * vec(x); }
  Matrix operator_from(const Vector& coords) const { return unvec(from_ * coords, d_, d_); }

  bool identity_first(double tol = kTolerance) const {
    return (elements_[0] - identity(d_)).norm() <= tol &&
           (duals_[0] - identity(d_) / static_cast<double>(d_)).norm() <= tol;
  }

  bool hermitian(double tol = kTolerance) const {
    for (std::size_t i = 0; i < elements_.size(); ++i)
      if (!is_hermitian(elements_[i], tol) || !is_hermitian(duals_[i], tol)) return false;
    return true;
  }

  bool traceless_tail(double tol = kTolerance) const {
    for (std::size_t i = 1; i < elements_.size(); ++i)
      if (std::abs(elements_[i].trace()) > tol * std::max(1.0, elements_[i].norm())) return false;
    return true;
  }

  /// Identity first, Hermitian, traceless tail: the hypotheses every
  /// root and memory construction relies on.
  bool is_identity_first_hermitian(double tol = kTolerance) const {
    return identity_first(tol) && hermitian(tol) && traceless_tail(tol);
  }

  bool same_as(const OperatorBasis& other, double tol = kTolerance) const {
    if (this == &other) return true;
    if (d_ != other.d_) return false;
    if (kind_ != BasisKind::custom && kind_ == other.kind_) return true;
    for (std::size_t i = 0; i < elements_.size(); ++i)
      if ((elements_[i] - other.elements_[i]).norm() > tol * std::max(1.0, elements_[i].norm())) return false;
    return true;
  }

 private:
  OperatorBasis(int d, BasisKind kind, std::vector<Matrix> elements, std::vector<Matrix> duals, Matrix from,
                Matrix to)
      : d_(d),
        kind_(kind),
        elements_(std::move(elements)),
        duals_(std::move(duals)),
        from_(std::move(from)),
        to_(std::move(to)) {}

  int d_;
  BasisKind kind_;
  std::vector<Matrix> elements_;
  std::vector<Matrix> duals_;
  Matrix from_;
  Matrix to_;
};

using BasisPtr = std::shared_ptr<const OperatorBasis>;

/// Generalized Gell-Mann matrices (tr(A_i A_j) = 2 delta_ij) with the
/// identity prepended. Order per level k = 1..d-1: for every j < k the
/// symmetric then antisymmetric generator on (j,k), then the k-th diagonal
/// one. For d = 2 this is {1, sigma_x, sigma_y, sigma_z}; for d = 3 it is
/// the conventional lambda_1..lambda_8.
inline std::vector<Matrix> gellmann_matrices(int d) {
  if (d < 2) throw Error(ErrorCode::invalid_dimension, "Gell-Mann basis needs d >= 2");
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(d * d));
  out.push_back(identity(d));
  for (int k = 1; k < d; ++k) {
    for (int j = 0; j < k; ++j) {
      Matrix s = Matrix::Zero(d, d);
      s(j, k) = s(k, j) = 1.0;
      out.push_back(s);
      Matrix a = Matrix::Zero(d, d);
      a(j, k) = Complex(0.0, -1.0);
      a(k, j) = Complex(0.0, 1.0);
      out.push_back(a);
    }
    Matrix diag = Matrix::Zero(d, d);
    for (int l = 0; l < k; ++l) diag(l, l) = 1.0;
    diag(k, k) = -static_cast<double>(k);
    diag *= std::sqrt(2.0 / (k * (k + 1.0)));
    out.push_back(diag);
  }
  return out;
}

inline BasisPtr gellmann_basis(int d) {
  return OperatorBasis::from_elements(gellmann_matrices(d), BasisKind::gellmann);
}

/// E_{nm} = |n><m| ordered by n*d + m; self-dual.
inline BasisPtr matrix_unit_basis(int d) {
  if (d < 1) throw Error(ErrorCode::invalid_dimension, "matrix-unit basis needs d >= 1");
  std::vector<Matrix> units;
  for (int n = 0; n < d; ++n)
    for (int m = 0; m < d; ++m) {
      Matrix e = Matrix::Zero(d, d);
      e(n, m) = 1.0;
      units.push_back(e);
    }
  auto duals = units;
  return OperatorBasis::from_elements_and_duals(std::move(units), std::move(duals), BasisKind::matrix_unit);
}

inline BasisPtr basis_of_kind(BasisKind kind, int d) {
  switch (kind) {
    case BasisKind::gellmann: return gellmann_basis(d);
    case BasisKind::matrix_unit: return matrix_unit_basis(d);
    case BasisKind::custom: break;
  }
  throw Error(ErrorCode::invalid_basis, "custom bases need explicit elements");
}

}  // namespace chx
