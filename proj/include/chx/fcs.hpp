#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "chx/channel.hpp"
#include "chx/error.hpp"
#include "chx/linalg.hpp"
#include "chx/random.hpp"

namespace chx {

/// Stinespring isometry V: C^d -> C^d (x) C^k, V|psi> = sum_a K_a|psi> (x) |a>.
/// Row (i*k + a), column j holds (K_a)_{ij}.
class Isometry {
 public:
  Isometry(Matrix v, int d, int k) : v_(std::move(v)), d_(d), k_(k) {
    if (v_.rows() != static_cast<Eigen::Index>(d) * k || v_.cols() != d)
      throw Error(ErrorCode::dimension_mismatch, "isometry must be (d*k) x d");
    if ((v_.adjoint() * v_ - identity(d)).norm() > 1e-9 * d)
      throw Error(ErrorCode::invalid_channel, "V^* V != 1: the Kraus set is not unital");
  }

  const Matrix& matrix() const noexcept { return v_; }
  int dim() const noexcept { return d_; }
  int ancilla_dim() const noexcept { return k_; }

  /// E_A(X) = V^* (X (x) A) V.
  Matrix transfer(const Matrix& x, const Matrix& a) const { return v_.adjoint() * kron(x, a) * v_; }

 private:
  Matrix v_;
  int d_;
  int k_;
};

inline Isometry stinespring_from_kraus(const KrausSet& kraus) {
  const int d = kraus.dim();
  const int k = static_cast<int>(kraus.size());
  Matrix v(static_cast<Eigen::Index>(d) * k, d);
  for (int a = 0; a < k; ++a)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) v(i * k + a, j) = kraus[static_cast<std::size_t>(a)](i, j);
  return Isometry(std::move(v), d, k);
}

/// Natural (row-major vec) matrix of E_A: sum_ab A_ab K_a^* (x) K_b^T.
inline Matrix transfer_map(const Isometry& v, const Matrix& a) {
  const int d = v.dim(), k = v.ancilla_dim();
  if (a.rows() != k || a.cols() != k) throw Error(ErrorCode::dimension_mismatch, "observable must be k x k");
  std::vector<Matrix> ks;
  for (int al = 0; al < k; ++al) {
    Matrix m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = v.matrix()(i * k + al, j);
    ks.push_back(std::move(m));
  }
  Matrix out = Matrix::Zero(d * d, d * d);
  for (int al = 0; al < k; ++al)
    for (int be = 0; be < k; ++be)
      if (a(al, be) != Complex(0.0)) out += a(al, be) * kron(ks[al].adjoint(), ks[be].transpose());
  return out;
}

/// Generator (T, rho) of a finitely correlated state, T in Heisenberg form.
class ChainGenerator {
 public:
  ChainGenerator(Isometry v, Matrix rho) : v_(std::move(v)), rho_(std::move(rho)) {
    const int d = v_.dim();
    if (rho_.rows() != d || !is_density_matrix(rho_, 1e-9))
      throw Error(ErrorCode::not_a_state, "rho must be a density matrix on C^d");
    // Invariance: tr(rho T(X)) = tr(rho X) for all X, i.e. T^*(rho) = rho.
    Matrix t_star = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        Matrix e = Matrix::Zero(d, d);
        e(i, j) = 1.0;
        t_star(j, i) = (rho_ * v_.transfer(e, identity(v_.ancilla_dim()))).trace();
      }
    if ((t_star - rho_).norm() > 1e-9)
      throw Error(ErrorCode::not_a_state, "rho is not an invariant state of the channel");
  }

  /// From any unital channel; Schrodinger channels are dualised first.
  /// rho defaults to 1/d.
  static ChainGenerator from_channel(const Channel& t, std::optional<Matrix> rho = std::nullopt) {
    const Channel h = t.picture() == Picture::heisenberg ? t : picture_dual(t);
    Isometry v = stinespring_from_kraus(choi_to_kraus(channel_to_choi(h)));
    const int d = t.dim();
    return ChainGenerator(std::move(v), rho ? *rho : Matrix(identity(d) / static_cast<double>(d)));
  }

  const Isometry& isometry() const noexcept { return v_; }
  const Matrix& rho() const noexcept { return rho_; }
  int dim() const noexcept { return v_.dim(); }
  int site_dim() const noexcept { return v_.ancilla_dim(); }

 private:
  Isometry v_;
  Matrix rho_;
};

/// omega_n(A_1 (x) ... (x) A_n) = tr(rho E_{A_1}(E_{A_2}(...E_{A_n}(1)))).
inline Complex evaluate_functional(const ChainGenerator& g, const std::vector<Matrix>& observables) {
  Matrix y = identity(g.dim());
  for (auto it = observables.rbegin(); it != observables.rend(); ++it) {
    if (it->rows() != g.site_dim() || it->cols() != g.site_dim())
      throw Error(ErrorCode::dimension_mismatch, "observable must be k x k");
    y = g.isometry().transfer(y, *it);
  }
  return (g.rho() * y).trace();
}

struct CorrelationReport {
  int gap = 0;
  double max_violation = 0.0;
  int samples = 0;
  bool factorizes = false;  // max_violation <= tol
};

/// Largest |omega(L (x) 1^gap (x) R) - omega(L) omega(R)| over random
/// Hermitian blocks L, R of one or two sites each.
inline CorrelationReport check_k_dependence(const ChainGenerator& g, int gap, int samples, double tol = 1e-9,
                                            std::uint64_t seed = 0) {
  if (gap < 0 || samples < 0) throw Error(ErrorCode::degenerate_parameter, "gap and samples must be >= 0");
  const int k = g.site_dim();
  CorrelationReport report{gap, 0.0, samples, true};
  for (int s = 0; s < samples; ++s) {
    Rng rng(split_seed(seed, static_cast<std::uint64_t>(s)));
    std::uniform_int_distribution<int> len(1, 2);
    const int nl = len(rng), nr = len(rng);
    std::vector<Matrix> left, right;
    for (int i = 0; i < nl; ++i) left.push_back(random_hermitian(rng, k));
    for (int i = 0; i < nr; ++i) right.push_back(random_hermitian(rng, k));
    std::vector<Matrix> window = left;
    for (int i = 0; i < gap; ++i) window.push_back(identity(k));
    window.insert(window.end(), right.begin(), right.end());
    const Complex joint = evaluate_functional(g, window);
    const Complex product = evaluate_functional(g, left) * evaluate_functional(g, right);
    report.max_violation = std::max(report.max_violation, std::abs(joint - product));
  }
  report.factorizes = report.max_violation <= tol;
  return report;
}

}  // namespace chx
