#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <vector>

#include "chx/error.hpp"

namespace chx {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Operators are flattened row-major: vec(X)[i*cols + j] = X(i, j). With this
// convention vec(A X B) = (A kron B^T) vec(X).
inline Vector vec(const Matrix& x) {
  Vector v(x.size());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) v(i * x.cols() + j) = x(i, j);
  return v;
}

inline Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  Matrix x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = v(i * cols + j);
  return x;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Matrix identity(Eigen::Index d) { return Matrix::Identity(d, d); }

inline bool all_finite(const Matrix& x) { return x.allFinite(); }

inline bool is_hermitian(const Matrix& x, double tol) {
  if (x.rows() != x.cols()) return false;
  return (x - x.adjoint()).norm() <= tol * std::max(1.0, x.norm());
}

struct HermitianEigen {
  RealVector values;  // ascending
  Matrix vectors;     // columns
};

// Dense Hermitian eigendecomposition; the input is symmetrised first so that
// round-off asymmetry does not leak into the spectrum.
inline HermitianEigen hermitian_eigen(const Matrix& x) {
  const Matrix h = 0.5 * (x + x.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline double min_eigenvalue(const Matrix& hermitian) {
  return hermitian_eigen(hermitian).values(0);
}

inline RealVector singular_values(const Matrix& x) {
  if (x.size() == 0) return RealVector();
  Eigen::JacobiSVD<Matrix> svd(x);
  return svd.singularValues();
}

inline double operator_norm(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  return singular_values(x)(0);
}

inline double trace_norm(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  return singular_values(x).sum();
}

// Number of singular values strictly above `threshold` (absolute).
inline int numerical_rank(const Matrix& x, double threshold) {
  if (x.size() == 0) return 0;
  const RealVector s = singular_values(x);
  return static_cast<int>((s.array() > threshold).count());
}

// Orthonormal basis (columns) of the numerical null space of x; singular
// values at or below `threshold` count as zero.
inline Matrix null_space(const Matrix& x, double threshold) {
  const Eigen::Index n = x.cols();
  if (x.rows() == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeFullV);
  const RealVector s = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > threshold) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

inline bool is_density_matrix(const Matrix& rho, double tol) {
  if (rho.rows() != rho.cols() || rho.rows() == 0) return false;
  if (!all_finite(rho) || !is_hermitian(rho, tol)) return false;
  if (std::abs(rho.trace() - Complex(1.0)) > tol) return false;
  return min_eigenvalue(rho) >= -tol;
}

inline Matrix matrix_power(const Matrix& x, int k) {
  Matrix out = identity(x.rows());
  Matrix base = x;
  while (k > 0) {
    if (k & 1) out = out * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return out;
}

// Partial trace over subsystem `which` of a row-major tensor product with
// the given factor dimensions.
inline Matrix partial_trace(const Matrix& x, const std::vector<int>& dims, std::size_t which) {
  const int total = std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<>());
  if (x.rows() != total || x.cols() != total)
    throw Error(ErrorCode::dimension_mismatch, "partial_trace: operator size does not match dims");
  int left = 1;
  for (std::size_t i = 0; i < which; ++i) left *= dims[i];
  const int mid = dims[which];
  const int right = total / (left * mid);
  Matrix out = Matrix::Zero(left * right, left * right);
  for (int a = 0; a < left; ++a)
    for (int c = 0; c < right; ++c)
      for (int a2 = 0; a2 < left; ++a2)
        for (int c2 = 0; c2 < right; ++c2) {
          Complex s = 0.0;
          for (int b = 0; b < mid; ++b)
            s += x((a * mid + b) * right + c, (a2 * mid + b) * right + c2);
          out(a * right + c, a2 * right + c2) = s;
        }
  return out;
}

}  // namespace chx
