#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "chx/basis.hpp"
#include "chx/channel.hpp"
#include "chx/error.hpp"
#include "chx/linalg.hpp"

namespace chx {

// ---------------------------------------------------------------------------
// Pauli-diagonal qubit channels

/// Eigenvalues of a Pauli-diagonal qubit channel; lambda0 is 1 for unital maps.
struct PauliDiagonalParams {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  double lambda0 = 1.0;
};

/// Weights of the Kraus decomposition T(X) = sum_i mu_i sigma_i X sigma_i.
struct KrausWeights {
  std::array<double, 4> mu{};
};

inline KrausWeights lambdas_to_mus(const PauliDiagonalParams& p) {
  const double l0 = p.lambda0, l1 = p.lambda1, l2 = p.lambda2, l3 = p.lambda3;
  return {{(l0 + l1 + l2 + l3) / 4.0, (l0 + l1 - l2 - l3) / 4.0, (l0 - l1 + l2 - l3) / 4.0,
           (l0 - l1 - l2 + l3) / 4.0}};
}

inline PauliDiagonalParams mus_to_lambdas(const KrausWeights& w) {
  const auto& m = w.mu;
  PauliDiagonalParams p;
  p.lambda0 = m[0] + m[1] + m[2] + m[3];
  p.lambda1 = m[0] + m[1] - m[2] - m[3];
  p.lambda2 = m[0] - m[1] + m[2] - m[3];
  p.lambda3 = m[0] - m[1] - m[2] + m[3];
  return p;
}

inline bool tetrahedron_check(const PauliDiagonalParams& p, double tol = 1e-12) {
  const double l1 = p.lambda1, l2 = p.lambda2, l3 = p.lambda3;
  return l1 + l2 + l3 >= -1.0 - tol && l1 - l2 - l3 >= -1.0 - tol && -l1 + l2 - l3 >= -1.0 - tol &&
         -l1 - l2 + l3 >= -1.0 - tol;
}

/// diag(1, lambda1, lambda2, lambda3) in the Pauli basis.
inline Channel pauli_diagonal_channel(const PauliDiagonalParams& p, Picture picture = Picture::heisenberg) {
  Matrix d = Matrix::Zero(4, 4);
  d(0, 0) = p.lambda0;
  d(1, 1) = p.lambda1;
  d(2, 2) = p.lambda2;
  d(3, 3) = p.lambda3;
  return Channel(gellmann_basis(2), picture, std::move(d));
}

// ---------------------------------------------------------------------------
// Maximal qubit roots

/// The angle phi solving tan(phi) = -(lambda2/lambda3) tan(theta), taken in (-pi/2, pi/2].
template <class T>
T qubit_root_phi(const T& theta, const T& lambda2, const T& lambda3) {
  using std::atan2;
  using std::cos;
  using std::sin;
  const T pi = atan2(T(0), T(-1));
  T phi = atan2(-lambda2 * sin(theta), lambda3 * cos(theta));
  while (phi > pi / 2) phi -= pi;
  while (phi <= -pi / 2) phi += pi;
  return phi;
}

template <class T>
using Mat3 = std::array<std::array<T, 3>, 3>;

/// R1(theta, phi) with first column (0, sin phi, -cos phi).
template <class T>
Mat3<T> qubit_root_rotation(const T& theta, const T& phi) {
  using std::cos;
  using std::sin;
  const T ct = cos(theta), st = sin(theta), cp = cos(phi), sp = sin(phi);
  return {{{T(0), ct, -st}, {sp, cp * st, cp * ct}, {-cp, sp * st, sp * ct}}};
}

/// R1 L with L = diag(0, lambda2, lambda3).
template <class T>
Mat3<T> qubit_root_core(const T& theta, const T& phi, const T& lambda2, const T& lambda3) {
  Mat3<T> r = qubit_root_rotation(theta, phi);
  for (auto& row : r) {
    row[0] = T(0);
    row[1] *= lambda2;
    row[2] *= lambda3;
  }
  return r;
}

/// Both conditions on the lower 2x2 block of R L: zero trace and zero determinant.
inline bool bloch_trace_condition(const Eigen::Matrix3d& r, double lambda2, double lambda3, double tol = 1e-10) {
  if ((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() > 1e-9)
    throw Error(ErrorCode::invalid_basis, "bloch_trace_condition needs an orthogonal matrix");
  Eigen::Matrix2d lam;
  lam << r(1, 1) * lambda2, r(1, 2) * lambda3, r(2, 1) * lambda2, r(2, 2) * lambda3;
  const double scale = std::max({1.0, std::abs(lambda2), std::abs(lambda3)});
  return std::abs(lam.trace()) <= tol * scale && std::abs(lam.determinant()) <= tol * scale * scale;
}

struct QubitRootSpec {
  double lambda2 = 0.5;
  double lambda3 = 0.5;
  double theta = 0.0;
  Eigen::Matrix3d r2 = Eigen::Matrix3d::Identity();
};

struct QubitRootBloch {
  double phi = 0.0;
  Eigen::Matrix3d bloch;  // R2^T R1 L R2
};

inline Eigen::Matrix3d to_eigen(const Mat3<double>& m) {
  Eigen::Matrix3d out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out(i, j) = m[i][j];
  return out;
}

/// Bloch matrix of a maximal qubit root. Both solutions phi and phi + pi of
/// the tangent relation are tried; the first with a nilpotent tail of order
/// exactly three is returned.
inline QubitRootBloch qubit_root_bloch(const QubitRootSpec& spec) {
  const double l2 = spec.lambda2, l3 = spec.lambda3;
  if (!std::isfinite(l2) || !std::isfinite(l3) || !std::isfinite(spec.theta))
    throw Error(ErrorCode::degenerate_parameter, "qubit root parameters must be finite");
  if (l2 == 0.0 || l3 == 0.0)
    throw Error(ErrorCode::order_degenerate, "lambda2 and lambda3 must both be non-zero (order would drop to 2)");
  if (std::abs(l2 + l3) > 1.0 + 1e-12 || std::abs(l2 - l3) > 1.0 + 1e-12)
    throw Error(ErrorCode::not_completely_positive, "qubit root needs |lambda2 +- lambda3| <= 1");
  const Eigen::Matrix3d& r2 = spec.r2;
  if ((r2.transpose() * r2 - Eigen::Matrix3d::Identity()).norm() > 1e-9 || r2.determinant() < 0.0)
    throw Error(ErrorCode::invalid_basis, "R2 must be a rotation");

  const double phi0 = qubit_root_phi(spec.theta, l2, l3);
  for (const double phi : {phi0, phi0 + std::numbers::pi}) {
    const Eigen::Matrix3d core = to_eigen(qubit_root_core(spec.theta, phi, l2, l3));
    const Eigen::Matrix3d m = r2.transpose() * core * r2;
    const Eigen::Matrix3d m2 = m * m;
    if ((m2 * m).norm() <= 1e-12 && m2.norm() > 1e-9) return {phi, m};
  }
  throw Error(ErrorCode::construction_failed, "no branch of the tangent relation gives an order-3 root");
}

/// Schrodinger-picture qubit channel r -> M r on the Bloch ball, in the
/// Pauli basis: D = 1 (+) M.
inline Channel qubit_maximal_root(const QubitRootSpec& spec) {
  const auto b = qubit_root_bloch(spec);
  Matrix d = Matrix::Zero(4, 4);
  d(0, 0) = 1.0;
  d.bottomRightCorner(3, 3) = b.bloch.cast<Complex>();
  Channel out(gellmann_basis(2), Picture::schrodinger, std::move(d));
  if (!is_completely_positive(out).completely_positive)
    throw Error(ErrorCode::not_completely_positive, "qubit root is not completely positive");
  return out;
}

// ---------------------------------------------------------------------------
// Roots by perturbing the bistochastic CDC

inline constexpr double kEpsilonCap = 1e3;

struct EpsilonInterval {
  double lo = -kEpsilonCap;
  double hi = kEpsilonCap;
  bool contains(double eps, double rel = 1e-12) const {
    return eps >= lo * (1.0 + rel) && eps <= hi * (1.0 + rel);
  }
};

struct PerturbRootSpec {
  int d = 0;
  BasisPtr basis;
  double epsilon = 0.0;
  EpsilonInterval certified_interval;
};

inline void require_root_basis(int d, const BasisPtr& basis) {
  if (d < 2) throw Error(ErrorCode::invalid_dimension, "roots need d >= 2");
  if (!basis || basis->dim() != d) throw Error(ErrorCode::dimension_mismatch, "basis dimension does not match d");
  if (!basis->is_identity_first_hermitian())
    throw Error(ErrorCode::invalid_basis, "basis must be identity-first, Hermitian, with a traceless tail");
}

/// rho_hat = d sum_{i=2}^{d^2-1} A_i (x) conj(A^{i+1}); the Choi operator of
/// T_eps is (1 + eps rho_hat)/d^2.
inline Matrix perturbation_rho_hat(const OperatorBasis& basis) {
  const int d = basis.dim();
  Matrix rho = Matrix::Zero(d * d, d * d);
  for (int i = 1; i + 1 < basis.size(); ++i) rho += kron(basis.element(i), basis.dual(i + 1).conjugate());
  return static_cast<double>(d) * rho;
}

/// The exact set of eps for which T_eps is completely positive.
inline EpsilonInterval max_epsilon(int d, const BasisPtr& basis) {
  require_root_basis(d, basis);
  const auto eig = hermitian_eigen(perturbation_rho_hat(*basis));
  const double lmin = eig.values(0), lmax = eig.values(eig.values.size() - 1);
  const double floor = 1e-14;
  EpsilonInterval out;
  if (lmax > floor) out.lo = std::max(-kEpsilonCap, -1.0 / lmax);
  if (lmin < -floor) out.hi = std::min(kEpsilonCap, 1.0 / -lmin);
  return out;
}

/// T_eps(X) = tr(X) 1/d + eps sum_{i=2}^{d^2-1} A_i tr((A^{i+1})^* X), without
/// any positivity check.
inline Channel perturbation_channel(const BasisPtr& basis, double eps) {
  const int n = basis->size();
  Matrix d = Matrix::Zero(n, n);
  d(0, 0) = 1.0;
  for (int i = 1; i + 1 < n; ++i) d(i, i + 1) = eps;
  return Channel(basis, Picture::heisenberg, std::move(d));
}

struct PerturbRoot {
  Channel channel;
  PerturbRootSpec spec;
};

/// eps = nullopt picks 0.9 times the interval endpoint of larger magnitude.
inline PerturbRoot perturb_root(int d, const BasisPtr& basis, std::optional<double> eps = std::nullopt) {
  const EpsilonInterval interval = max_epsilon(d, basis);
  double e = 0.0;
  if (eps) {
    e = *eps;
    if (!std::isfinite(e)) throw Error(ErrorCode::degenerate_parameter, "epsilon must be finite");
    if (e == 0.0) throw Error(ErrorCode::degenerate_parameter, "epsilon = 0 gives the CDC itself");
    if (!interval.contains(e))
      throw Error(ErrorCode::not_completely_positive, "epsilon lies outside the completely positive interval");
  } else {
    e = 0.9 * (interval.hi >= -interval.lo ? interval.hi : interval.lo);
  }
  return {perturbation_channel(basis, e), PerturbRootSpec{d, basis, e, interval}};
}

// ---------------------------------------------------------------------------
// Root order and Jordan structure

struct RootReport {
  int order = 0;
  std::vector<double> residuals;  // ||S^j - target||_F for j = 1..order
  std::vector<int> jordan_block_sizes;
};

/// Sizes (descending) of the nilpotent Jordan blocks of n, from the rank
/// sequence of its powers.
inline std::vector<int> nilpotent_block_sizes(const Matrix& n) {
  const int size = static_cast<int>(n.rows());
  const double norm = operator_norm(n);
  std::vector<int> ranks{size};
  Matrix p = identity(size);
  for (int j = 1; j <= size; ++j) {
    p = p * n;
    const double threshold = std::max(1e-9 * std::pow(norm, j), 1e-12);
    ranks.push_back(numerical_rank(p, threshold));
    if (ranks.back() == ranks[ranks.size() - 2]) break;
  }
  // at_least[j] = number of blocks of size >= j
  std::vector<int> at_least(ranks.size() + 1, 0);
  for (std::size_t j = 1; j < ranks.size(); ++j) at_least[j] = ranks[j - 1] - ranks[j];
  std::vector<int> sizes;
  for (std::size_t j = ranks.size() - 1; j >= 1; --j) {
    const int exactly = at_least[j] - at_least[j + 1];
    for (int c = 0; c < exactly; ++c) sizes.push_back(static_cast<int>(j));
  }
  return sizes;
}

/// Jordan block sizes of the channel restricted to traceless operators.
inline std::vector<int> jordan_block_sizes(const Channel& s) {
  const auto& b = *s.basis();
  const Matrix d = (b.identity_first() && b.traceless_tail()) ? s.matrix() : s.in_basis(gellmann_basis(s.dim())).matrix();
  const int n = static_cast<int>(d.rows()) - 1;
  return nilpotent_block_sizes(d.bottomRightCorner(n, n));
}

inline RootReport verify_root_order(const Channel& s, const Channel& target, double tol = 1e-9) {
  require_compatible(s, target);
  const int max_order = s.dim() * s.dim();
  RootReport report;
  Matrix p = identity(s.matrix().rows());
  for (int k = 1; k <= max_order; ++k) {
    p = p * s.matrix();
    report.residuals.push_back((p - target.matrix()).norm());
    if (report.residuals.back() <= tol) {
      report.order = k;
      report.jordan_block_sizes = jordan_block_sizes(s);
      return report;
    }
  }
  throw Error(ErrorCode::not_a_root, "no power S^k with k <= d^2 reaches the target");
}

// ---------------------------------------------------------------------------
// Lower bound on the cb-norm distance of a root from the CDC

struct CbBoundRoot {
  Channel channel;
  double bound = 0.0;    // (d-1)/d
  double witness = 0.0;  // ||T_eps(A_3) - T_cdc(A_3)||_inf
  double epsilon = 0.0;
  double min_eigenvalue = 0.0;
};

/// A_1 = 1; A_2 has a unique eigenvalue of maximal modulus; A_3 has
/// eigenvalues (-1)^i (last one 0 in odd d); the remaining elements complete
/// an orthogonal basis and are scaled by delta^(3-i).
inline BasisPtr cb_bound_basis(int d, double delta) {
  if (d < 2) throw Error(ErrorCode::invalid_dimension, "cb bound needs d >= 2");
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw Error(ErrorCode::degenerate_parameter, "delta must be positive and finite");
  Matrix a2 = Matrix::Zero(d, d), a3 = Matrix::Zero(d, d);
  if (d % 2 == 0) {
    a2(0, 1) = a2(1, 0) = 1.0;
  } else {
    for (int i = 0; i + 1 < d; ++i) a2(i, i) = 1.0;
    a2(d - 1, d - 1) = -static_cast<double>(d - 1);
  }
  for (int i = 0; i < d; ++i) a3(i, i) = (i % 2 == 0) ? -1.0 : 1.0;
  if (d % 2 == 1) a3(d - 1, d - 1) = 0.0;

  std::vector<Matrix> ortho{identity(d), a2, a3};
  const auto hs = [](const Matrix& x, const Matrix& y) { return (x.adjoint() * y).trace(); };
  for (const auto& g : gellmann_matrices(d)) {
    if (static_cast<int>(ortho.size()) == d * d) break;
    Matrix r = g;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : ortho) r -= (hs(q, r) / hs(q, q)) * q;
    r = 0.5 * (r + r.adjoint());
    if (r.norm() > 1e-6) ortho.push_back(r * (std::sqrt(2.0) / r.norm()));
  }
  if (static_cast<int>(ortho.size()) != d * d)
    throw Error(ErrorCode::construction_failed, "could not complete the cb-bound basis");

  std::vector<Matrix> elements, duals;
  for (int i = 0; i < d * d; ++i) {
    const double scale = i >= 3 ? std::pow(delta, 2 - i) : 1.0;  // 0-based: delta^{3-(i+1)}
    const double norm2 = hs(ortho[i], ortho[i]).real();
    elements.push_back(scale * ortho[i]);
    duals.push_back(ortho[i] / (scale * norm2));
  }
  return OperatorBasis::from_elements_and_duals(std::move(elements), std::move(duals));
}

inline CbBoundRoot cb_lower_bound_root(int d, double delta) {
  const BasisPtr basis = cb_bound_basis(d, delta);
  const double a2_norm = operator_norm(basis->element(1));
  const double eps = static_cast<double>(d - 1) / (static_cast<double>(d) * a2_norm);
  Channel channel = perturbation_channel(basis, eps);
  const auto cp = is_completely_positive(channel);
  if (!cp.completely_positive)
    throw Error(ErrorCode::retry_with_smaller_delta,
                "Choi operator has eigenvalue " + std::to_string(cp.min_eigenvalue) + "; retry with a smaller delta");
  const Matrix& a3 = basis->element(2);
  const Matrix diff = channel.apply(a3) - bistochastic_cdc(basis).apply(a3);
  CbBoundRoot out{std::move(channel), static_cast<double>(d - 1) / d, operator_norm(diff), eps, cp.min_eigenvalue};
  return out;
}

}  // namespace chx
