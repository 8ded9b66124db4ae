#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "chx/linalg.hpp"

namespace chx {

using Rng = std::mt19937_64;

/// Derives an independent stream seed for sample `index`, so sample loops
/// stay deterministic when run in any order.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Matrix random_ginibre(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex(re, im);
    }
  return g;
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase fix).
inline Matrix random_unitary(Rng& rng, int d) {
  const Matrix g = random_ginibre(rng, d, d);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR();
  for (int j = 0; j < d; ++j) {
    const Complex diag = r(j, j);
    if (std::abs(diag) > 0.0) q.col(j) *= diag / std::abs(diag);
  }
  return q;
}

inline Vector random_pure_state(Rng& rng, int d) {
  Vector v = random_ginibre(rng, d, 1).col(0);
  return v / v.norm();
}

/// Density matrix from a Ginibre matrix of the given rank (Hilbert-Schmidt measure for rank = d).
inline Matrix random_density_matrix(Rng& rng, int d, int rank = -1) {
  const Matrix g = random_ginibre(rng, d, rank > 0 ? rank : d);
  Matrix rho = g * g.adjoint();
  return rho / rho.trace();
}

/// Hermitian matrix with Gaussian entries, normalised to operator norm 1.
inline Matrix random_hermitian(Rng& rng, int d) {
  const Matrix g = random_ginibre(rng, d, d);
  Matrix h = 0.5 * (g + g.adjoint());
  return h / operator_norm(h);
}

/// Kraus operators of a random unital map X -> sum K^* X K (sum K^* K = 1).
inline std::vector<Matrix> random_unital_kraus(Rng& rng, int d, int count) {
  Matrix stacked = random_ginibre(rng, static_cast<Eigen::Index>(d) * count, d);
  Eigen::HouseholderQR<Matrix> qr(stacked);
  const Matrix q = Matrix(qr.householderQ()).leftCols(d);
  std::vector<Matrix> out;
  for (int a = 0; a < count; ++a) out.push_back(q.block(static_cast<Eigen::Index>(a) * d, 0, d, d));
  return out;
}

/// Arbitrary completely positive (generally neither unital nor trace-preserving) Kraus set.
inline std::vector<Matrix> random_kraus(Rng& rng, int d, int count) {
  std::vector<Matrix> out;
  for (int a = 0; a < count; ++a) out.push_back(random_ginibre(rng, d, d) / std::sqrt(2.0 * d * count));
  return out;
}

}  // namespace chx
