#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chx/basis.hpp"
#include "chx/channel.hpp"
#include "chx/error.hpp"
#include "chx/linalg.hpp"
#include "chx/random.hpp"

namespace chx {

/// A channel M (x) A -> B (x) M in the Schrodinger picture, stored as
/// <i,j|D|k,l> = tr((M^i (x) B^j)^* T(M_k (x) A_l)) over Gell-Mann bases.
/// Row index is i*dB^2 + j, column index k*dA^2 + l; the output operator
/// space is ordered B first, then M.
class MemoryChannel {
 public:
  MemoryChannel(int dm, int da, int db, Matrix d)
      : dm_(dm), da_(da), db_(db), matrix_(std::move(d)) {
    if (dm < 2 || da < 2 || db < 2) throw Error(ErrorCode::invalid_dimension, "memory dimensions must be >= 2");
    if (matrix_.rows() != dm * dm * db * db || matrix_.cols() != dm * dm * da * da)
      throw Error(ErrorCode::dimension_mismatch, "memory channel matrix has the wrong size");
    if (!all_finite(matrix_)) throw Error(ErrorCode::invalid_channel, "memory channel has non-finite entries");
    mb_ = gellmann_basis(dm);
    ab_ = gellmann_basis(da);
    bb_ = gellmann_basis(db);
  }

  int dm() const noexcept { return dm_; }
  int da() const noexcept { return da_; }
  int db() const noexcept { return db_; }
  const Matrix& matrix() const noexcept { return matrix_; }
  const BasisPtr& memory_basis() const noexcept { return mb_; }
  const BasisPtr& input_basis() const noexcept { return ab_; }
  const BasisPtr& output_basis() const noexcept { return bb_; }

  /// Matrix on row-major vec: operators on M (x) A to operators on B (x) M.
  Matrix natural() const {
    const int nm = dm_ * dm_, na = da_ * da_, nb = db_ * db_;
    Matrix from_out(static_cast<Eigen::Index>(nb) * nm, static_cast<Eigen::Index>(nb) * nm);
    for (int i = 0; i < nm; ++i)
      for (int j = 0; j < nb; ++j) from_out.col(i * nb + j) = vec(kron(bb_->element(j), mb_->element(i)));
    Matrix to_in(static_cast<Eigen::Index>(nm) * na, static_cast<Eigen::Index>(nm) * na);
    for (int k = 0; k < nm; ++k)
      for (int l = 0; l < na; ++l) to_in.row(k * na + l) = vec(kron(mb_->dual(k), ab_->dual(l))).adjoint();
    return from_out * matrix_ * to_in;
  }

  /// Choi matrix sum_ab T(E_ab) (x) E_ab over matrix units of M (x) A.
  Matrix choi() const {
    const int nin = dm_ * da_, nout = db_ * dm_;
    const Matrix l = natural();
    Matrix j(static_cast<Eigen::Index>(nout) * nin, static_cast<Eigen::Index>(nout) * nin);
    for (int o = 0; o < nout; ++o)
      for (int o2 = 0; o2 < nout; ++o2)
        for (int a = 0; a < nin; ++a)
          for (int b = 0; b < nin; ++b) j(o * nin + a, o2 * nin + b) = l(o * nout + o2, a * nin + b);
    return j;
  }

  PositivityReport completely_positive(double tol = kPositivityTolerance) const {
    const Matrix j = choi();
    const double lambda = min_eigenvalue(j);
    return {lambda >= -tol * j.norm(), lambda};
  }

  bool trace_preserving(double tol = 1e-9) const {
    const Matrix l = natural();
    const Vector one_in = vec(identity(dm_ * da_)), one_out = vec(identity(db_ * dm_));
    return (l.transpose() * one_out - one_in).norm() <= tol * std::max(1.0, l.norm());
  }

  /// Kraus operators (dB*dM x dM*dA) with T(Y) = sum K Y K^*.
  std::vector<Matrix> kraus(double tol = 1e-12) const {
    const int nin = dm_ * da_, nout = db_ * dm_;
    const auto eig = hermitian_eigen(choi());
    const double scale = std::max(1.0, std::abs(eig.values(eig.values.size() - 1)));
    std::vector<Matrix> out;
    for (Eigen::Index e = eig.values.size() - 1; e >= 0; --e) {
      const double lambda = eig.values(e);
      if (lambda <= tol * scale) break;
      Matrix k(nout, nin);
      for (int o = 0; o < nout; ++o)
        for (int a = 0; a < nin; ++a) k(o, a) = std::sqrt(lambda) * eig.vectors(o * nin + a, e);
      out.push_back(std::move(k));
    }
    return out;
  }

 private:
  int dm_, da_, db_;
  Matrix matrix_;
  BasisPtr mb_, ab_, bb_;
};

/// Blocks X_{1,l}[k, m] = <k,1|D|m,l> for l = 1..dA^2 and their tails with
/// first row and column removed.
struct MemoryBranchFamily {
  int dm = 0;
  int da = 0;
  int db = 0;
  std::vector<Matrix> blocks;
  std::vector<Matrix> reduced;
};

inline MemoryBranchFamily extract_branch(const MemoryChannel& t) {
  if (!t.memory_basis()->is_identity_first_hermitian() || !t.input_basis()->is_identity_first_hermitian())
    throw Error(ErrorCode::invalid_basis, "memory and input bases must be identity-first");
  MemoryBranchFamily f{t.dm(), t.da(), t.db(), {}, {}};
  const int nm = t.dm() * t.dm(), na = t.da() * t.da(), nb = t.db() * t.db();
  for (int l = 0; l < na; ++l) {
    Matrix x(nm, nm);
    for (int k = 0; k < nm; ++k)
      for (int m = 0; m < nm; ++m) x(k, m) = t.matrix()(k * nb, m * na + l);
    f.reduced.push_back(x.bottomRightCorner(nm - 1, nm - 1));
    f.blocks.push_back(std::move(x));
  }
  return f;
}

/// Superoperator of the memory branch rho -> tr_B T(rho (x) sigma) in the
/// memory basis: (dB/dA) X_{1,1} + dB sum_{r>=2} tr(A^r sigma) X_{1,r}.
inline Matrix parameterized_branch(const MemoryBranchFamily& f, const Matrix& sigma, double tol = 1e-9) {
  if (sigma.rows() != f.da || !is_density_matrix(sigma, tol))
    throw Error(ErrorCode::not_a_state, "sigma must be a density matrix on the input system");
  const auto basis = gellmann_basis(f.da);
  Matrix d = (static_cast<double>(f.db) / f.da) * f.blocks[0];
  for (int r = 1; r < f.da * f.da; ++r) {
    const Complex alpha = (basis->dual(r).adjoint() * sigma).trace();
    d += static_cast<double>(f.db) * alpha * f.blocks[static_cast<std::size_t>(r)];
  }
  return d;
}

/// D_{sigma_n} ... D_{sigma_1}; sigma_1 enters first.
inline Matrix branch_concatenation(const MemoryBranchFamily& f, const std::vector<Matrix>& sigmas) {
  const int nm = f.dm * f.dm;
  Matrix out = identity(nm);
  for (const auto& s : sigmas) out = parameterized_branch(f, s) * out;
  return out;
}

// ---------------------------------------------------------------------------
// Nilpotency of the algebra generated by the reduced blocks

struct NilpotencyVerdict {
  bool nilpotent = false;
  int depth = 0;                       // nilpotency index when nilpotent
  std::optional<Matrix> flag_basis;    // orthonormal, makes every generator strictly upper triangular
  std::vector<int> witness_word;       // 0-based generator indices, when not nilpotent
  int witness_power = 0;               // tr(W^m) != 0 for this m
};

/// Searches short words W of the generators for one with tr(W^m) != 0.
inline std::pair<std::vector<int>, int> find_trace_witness(const std::vector<Matrix>& gens, double threshold,
                                                           int max_length = 6, std::size_t max_words = 20000) {
  const int n = static_cast<int>(gens.front().rows());
  std::deque<std::pair<std::vector<int>, Matrix>> queue;
  queue.emplace_back(std::vector<int>{}, identity(n));
  std::size_t visited = 0;
  while (!queue.empty() && visited < max_words) {
    auto [word, w] = std::move(queue.front());
    queue.pop_front();
    if (static_cast<int>(word.size()) == max_length) continue;
    for (int g = 0; g < static_cast<int>(gens.size()); ++g) {
      ++visited;
      Matrix next = w * gens[static_cast<std::size_t>(g)];
      std::vector<int> next_word = word;
      next_word.push_back(g);
      Matrix p = next;
      for (int m = 1; m <= n; ++m) {
        if (std::abs(p.trace()) > threshold) return {next_word, m};
        p = p * next;
      }
      if (next.norm() > threshold) queue.emplace_back(std::move(next_word), std::move(next));
    }
  }
  return {{}, 0};
}

/// Common-kernel flag: K_0 = 0, K_{j+1} = {x : X x in K_j for every generator X}.
/// The algebra is nilpotent iff the flag reaches the whole space; the depth
/// is the first j with K_j = V.
inline NilpotencyVerdict decide_nilpotent(const std::vector<Matrix>& gens, double rel_tol = 1e-9) {
  if (gens.empty()) throw Error(ErrorCode::invalid_dimension, "no generators");
  const Eigen::Index n = gens.front().rows();
  double scale = 0.0;
  for (const auto& g : gens) {
    if (g.rows() != n || g.cols() != n) throw Error(ErrorCode::dimension_mismatch, "generators differ in size");
    scale = std::max(scale, operator_norm(g));
  }
  NilpotencyVerdict v;
  if (n == 0) {
    v.nilpotent = true;
    v.depth = 1;
    v.flag_basis = Matrix(0, 0);
    return v;
  }
  const double threshold = rel_tol * std::max(scale, 1e-300);
  if (scale == 0.0) {
    v.nilpotent = true;
    v.depth = 1;
    v.flag_basis = identity(n);
    return v;
  }

  Matrix flag(n, 0);  // orthonormal columns spanning K_j
  for (int j = 1; j <= n; ++j) {
    const Matrix proj = flag * flag.adjoint();
    const Matrix complement = identity(n) - proj;
    Matrix stacked(n * static_cast<Eigen::Index>(gens.size()), n);
    for (std::size_t g = 0; g < gens.size(); ++g)
      stacked.middleRows(static_cast<Eigen::Index>(g) * n, n) = complement * gens[g];
    const Matrix kernel = null_space(stacked, threshold);
    if (kernel.cols() <= flag.cols()) break;
    // Extend the flag by the part of the new kernel orthogonal to K_j.
    Matrix extension = complement * kernel;
    Eigen::JacobiSVD<Matrix> svd(extension, Eigen::ComputeThinU);
    const Eigen::Index added = kernel.cols() - flag.cols();
    Matrix next(n, flag.cols() + added);
    next << flag, svd.matrixU().leftCols(added);
    flag = std::move(next);
    if (flag.cols() == n) {
      v.nilpotent = true;
      v.depth = j;
      v.flag_basis = flag;
      return v;
    }
  }
  auto [word, power] = find_trace_witness(gens, threshold);
  v.witness_word = std::move(word);
  v.witness_power = power;
  return v;
}

struct ForgetfulnessVerdict {
  bool strictly_forgetful = false;
  std::optional<int> memory_depth;
  std::optional<Matrix> triangularizing_basis;
  std::vector<int> witness;  // 1-based input-basis indices l of the word X^_{1,l}...
  int witness_power = 0;
};

inline ForgetfulnessVerdict is_strictly_forgetful(const MemoryChannel& t, double tol = 1e-9) {
  const auto f = extract_branch(t);
  const auto v = decide_nilpotent(f.reduced, tol);
  ForgetfulnessVerdict out;
  out.strictly_forgetful = v.nilpotent;
  if (v.nilpotent) {
    out.memory_depth = v.depth;
    out.triangularizing_basis = v.flag_basis;
  } else {
    for (int g : v.witness_word) out.witness.push_back(g + 1);
    out.witness_power = v.witness_power;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Constructions

struct ForgetfulSpec {
  int dm = 2;
  int da = 2;
  int db = 2;
  std::vector<Matrix> j;  // dA^2 strictly upper triangular (dM^2-1)-square matrices
  RealVector v;           // length dM^2-1
  double eta = 0.0;       // <= 0: largest completely positive scale by bisection
};

/// Memory channel whose only non-zero rows are those with output B-index 1:
/// <k,1|D|m,l> = X_{1,l}[k,m]. All other rows are the bistochastic CDC
/// baseline (zero in a traceless tail basis).
inline MemoryChannel memory_from_blocks(int dm, int da, int db, const std::vector<Matrix>& blocks) {
  const int nm = dm * dm, na = da * da, nb = db * db;
  Matrix d = Matrix::Zero(static_cast<Eigen::Index>(nm) * nb, static_cast<Eigen::Index>(nm) * na);
  for (int l = 0; l < na; ++l)
    for (int k = 0; k < nm; ++k)
      for (int m = 0; m < nm; ++m) d(k * nb, m * na + l) = blocks[static_cast<std::size_t>(l)](k, m);
  return MemoryChannel(dm, da, db, std::move(d));
}

inline std::vector<Matrix> forgetful_blocks(const ForgetfulSpec& s, double eta) {
  const int nm = s.dm * s.dm;
  const double ratio = static_cast<double>(s.da) / s.db;
  std::vector<Matrix> blocks;
  for (int l = 0; l < s.da * s.da; ++l) {
    Matrix x = Matrix::Zero(nm, nm);
    if (l == 0) {
      x(0, 0) = ratio;
      for (int i = 1; i < nm; ++i) x(i, 0) = ratio * eta * s.v(i - 1);
    }
    x.bottomRightCorner(nm - 1, nm - 1) = eta * s.j[static_cast<std::size_t>(l)];
    blocks.push_back(std::move(x));
  }
  return blocks;
}

struct ScaleSearch {
  double scale = 0.0;
  double min_eigenvalue = 0.0;
};

/// Largest s in (0, 1] (to 2^-20 resolution) with build(s) completely positive.
template <class Build>
ScaleSearch bisect_cp_scale(const Build& build, int iterations = 20) {
  auto at_one = build(1.0).completely_positive();
  if (at_one.completely_positive) return {1.0, at_one.min_eigenvalue};
  double lo = 0.0, hi = 1.0, lo_lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto cp = build(mid).completely_positive();
    if (cp.completely_positive) {
      lo = mid;
      lo_lambda = cp.min_eigenvalue;
    } else {
      hi = mid;
    }
  }
  return {lo, lo == 0.0 ? at_one.min_eigenvalue : lo_lambda};
}

struct ForgetfulConstruction {
  MemoryChannel channel;
  double eta = 0.0;
};

/// Builds the channel and reports the scale eta that was used.
inline ForgetfulConstruction construct_strictly_forgetful_scaled(const ForgetfulSpec& s) {
  if (s.dm < 2 || s.da < 2 || s.db < 2) throw Error(ErrorCode::invalid_dimension, "dimensions must be >= 2");
  const int t = s.dm * s.dm - 1;
  if (static_cast<int>(s.j.size()) != s.da * s.da)
    throw Error(ErrorCode::dimension_mismatch, "need one J_l per input basis element");
  if (s.v.size() != t) throw Error(ErrorCode::dimension_mismatch, "v must have length dM^2 - 1");
  for (const auto& j : s.j) {
    if (j.rows() != t || j.cols() != t) throw Error(ErrorCode::dimension_mismatch, "J_l must be (dM^2-1)-square");
    for (int r = 0; r < t; ++r)
      for (int c = 0; c <= r; ++c)
        if (std::abs(j(r, c)) > 1e-12) throw Error(ErrorCode::invalid_channel, "J_l must be strictly upper triangular");
  }
  const auto build = [&](double eta) { return memory_from_blocks(s.dm, s.da, s.db, forgetful_blocks(s, eta)); };
  if (s.eta > 0.0) {
    MemoryChannel out = build(s.eta);
    const auto cp = out.completely_positive();
    if (!cp.completely_positive)
      throw Error(ErrorCode::not_completely_positive,
                  "eta = " + std::to_string(s.eta) + " gives Choi eigenvalue " + std::to_string(cp.min_eigenvalue));
    return {std::move(out), s.eta};
  }
  const auto found = bisect_cp_scale(build);
  if (found.scale <= 0.0)
    throw Error(ErrorCode::construction_failed,
                "no completely positive eta > 0; lambda_min at eta = 1 is " + std::to_string(found.min_eigenvalue));
  return {build(found.scale), found.scale};
}

inline MemoryChannel construct_strictly_forgetful(const ForgetfulSpec& s) {
  return construct_strictly_forgetful_scaled(s).channel;
}

/// Qubit memory channel with X^_{1,2} = [[0,0,0],[-a,0,0],[0,a,0]],
/// X^_{1,3} = [[0,b,0],[0,0,b],[0,0,0]] and the remaining blocks at the CDC baseline.
inline MemoryChannel counterexample_channel_unchecked(double a, double b) {
  std::vector<Matrix> blocks(4, Matrix::Zero(4, 4));
  blocks[0](0, 0) = 1.0;
  blocks[1](2, 1) = -a;
  blocks[1](3, 2) = a;
  blocks[2](1, 2) = b;
  blocks[2](2, 3) = b;
  return memory_from_blocks(2, 2, 2, blocks);
}

inline MemoryChannel counterexample_channel(double a, double b) {
  if (a == 0.0 || b == 0.0 || !std::isfinite(a) || !std::isfinite(b))
    throw Error(ErrorCode::degenerate_parameter, "a and b must be finite and non-zero");
  MemoryChannel out = counterexample_channel_unchecked(a, b);
  const auto cp = out.completely_positive();
  if (!cp.completely_positive) {
    const auto found = bisect_cp_scale([&](double s) { return counterexample_channel_unchecked(s * a, s * b); });
    throw Error(ErrorCode::not_completely_positive,
                "(a, b) is not completely positive (lambda_min " + std::to_string(cp.min_eigenvalue) +
                    "); largest feasible scale of (a, b) is " + std::to_string(found.scale));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dense simulation of the n-fold concatenation

/// Memory state after feeding sys (on A^{(x)n}, first factor consumed first)
/// through n uses of T starting from memory state omega, with all outputs B
/// traced out.
inline Matrix concatenate_dense(const MemoryChannel& t, const std::vector<Matrix>& kraus, const Matrix& omega,
                                const Matrix& sys, int n) {
  const int dm = t.dm(), da = t.da(), db = t.db();
  int rest = 1;
  for (int i = 0; i < n; ++i) rest *= da;
  if (sys.rows() != rest || omega.rows() != dm) throw Error(ErrorCode::dimension_mismatch, "state sizes do not match");
  Matrix state = kron(omega, sys);  // M (x) A_1 (x) ... (x) A_n
  for (int step = 0; step < n; ++step) {
    rest /= da;
    const Matrix id_rest = identity(rest);
    Matrix next = Matrix::Zero(static_cast<Eigen::Index>(db) * dm * rest, static_cast<Eigen::Index>(db) * dm * rest);
    for (const auto& k : kraus) {
      const Matrix big = kron(k, id_rest);
      next += big * state * big.adjoint();
    }
    state = partial_trace(next, {db, dm * rest}, 0);
  }
  return state;
}

inline constexpr double kMaxSimulatedQubits = 8.0;

/// Largest ||tr_B T_n((omega_1 - omega_2) (x) sys)||_1 over random entangled
/// pure sys, random memory pairs, and (for qubit inputs) a deterministic
/// family of alternating Pauli-eigenstate sequences and their superpositions.
inline double entangled_input_check(const MemoryChannel& t, int n, int samples, std::uint64_t seed = 0) {
  if (n < 0 || samples < 0) throw Error(ErrorCode::degenerate_parameter, "n and samples must be >= 0");
  if (n * std::log2(static_cast<double>(t.da())) > kMaxSimulatedQubits + 1e-12)
    throw Error(ErrorCode::size_cap_exceeded, "n * log2(dA) exceeds the dense simulation cap of 8");
  const int dm = t.dm(), da = t.da();
  int total = 1;
  for (int i = 0; i < n; ++i) total *= da;
  const auto kraus = t.kraus();

  const auto distinguish = [&](const Matrix& w1, const Matrix& w2, const Matrix& sys) {
    if (n == 0) return trace_norm(w1 - w2);
    return trace_norm(concatenate_dense(t, kraus, w1 - w2, sys, n));
  };

  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    Rng rng(split_seed(seed, static_cast<std::uint64_t>(s)));
    const Vector psi = random_pure_state(rng, total);
    const Matrix sys = psi * psi.adjoint();
    const Vector m1 = random_pure_state(rng, dm), m2 = random_pure_state(rng, dm);
    best = std::max(best, distinguish(m1 * m1.adjoint(), m2 * m2.adjoint(), sys));
  }

  if (da == 2 && dm == 2 && n > 0) {
    const double r = 1.0 / std::sqrt(2.0);
    const Vector plus_x = (Vector(2) << r, r).finished();
    const Vector plus_y = (Vector(2) << Complex(r), Complex(0.0, r)).finished();
    std::vector<std::pair<Matrix, Matrix>> pairs;
    const Vector zero = (Vector(2) << 1.0, 0.0).finished(), one = (Vector(2) << 0.0, 1.0).finished();
    const Vector minus_x = (Vector(2) << r, -r).finished();
    const Vector minus_y = (Vector(2) << Complex(r), Complex(0.0, -r)).finished();
    pairs.emplace_back(zero * zero.adjoint(), one * one.adjoint());
    pairs.emplace_back(plus_x * plus_x.adjoint(), minus_x * minus_x.adjoint());
    pairs.emplace_back(plus_y * plus_y.adjoint(), minus_y * minus_y.adjoint());

    std::vector<Vector> sequences;
    for (int phase = 0; phase < 2; ++phase) {
      Vector v = Vector::Ones(1);
      for (int i = 0; i < n; ++i) {
        const bool y = ((i + phase) % 2 == 0);
        const Vector& site = y ? plus_y : plus_x;
        Vector next(v.size() * 2);
        for (Eigen::Index a = 0; a < v.size(); ++a) next.segment(a * 2, 2) = v(a) * site;
        v = std::move(next);
      }
      sequences.push_back(std::move(v));
    }
    Vector superposed = sequences[0] + sequences[1];
    if (superposed.norm() > 1e-12) sequences.push_back(superposed / superposed.norm());
    for (const auto& seq : sequences) {
      const Matrix sys = seq * seq.adjoint();
      for (const auto& [w1, w2] : pairs) best = std::max(best, distinguish(w1, w2, sys));
    }
  }
  return best;
}

}  // namespace chx
