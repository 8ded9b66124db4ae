#include "chx/memory.hpp"

#include <gtest/gtest.h>

#include <numbers>

#include "chx/random.hpp"
#include "support/oracles.hpp"

using namespace chx;

namespace {

// Memory channel from Kraus operators (dB*dM x dM*dA), T(Y) = sum K Y K^*.
MemoryChannel memory_from_kraus(const std::vector<Matrix>& ks, int dm, int da, int db) {
  const auto mb = gellmann_basis(dm), ab = gellmann_basis(da), bb = gellmann_basis(db);
  const int nm = dm * dm, na = da * da, nb = db * db;
  Matrix d(nm * nb, nm * na);
  for (int k = 0; k < nm; ++k)
    for (int l = 0; l < na; ++l) {
      const Matrix in = kron(mb->element(k), ab->element(l));
      Matrix out = Matrix::Zero(db * dm, db * dm);
      for (const auto& kr : ks) out += kr * in * kr.adjoint();
      for (int i = 0; i < nm; ++i)
        for (int j = 0; j < nb; ++j) d(i * nb + j, k * na + l) = (kron(bb->dual(j), mb->dual(i)).adjoint() * out).trace();
    }
  return MemoryChannel(dm, da, db, d);
}

// tr_B T(rho (x) sigma) in memory coordinates, from the Kraus form.
Matrix branch_by_kraus(const std::vector<Matrix>& ks, int dm, int db, const Matrix& sigma) {
  const auto mb = gellmann_basis(dm);
  const int nm = dm * dm;
  Matrix d(nm, nm);
  for (int l = 0; l < nm; ++l) {
    const Matrix in = kron(mb->element(l), sigma);
    Matrix out = Matrix::Zero(db * dm, db * dm);
    for (const auto& kr : ks) out += kr * in * kr.adjoint();
    const Matrix reduced = partial_trace(out, {db, dm}, 0);
    for (int i = 0; i < nm; ++i) d(i, l) = (mb->dual(i).adjoint() * reduced).trace();
  }
  return d;
}

Matrix pure(const Vector& v) { return v * v.adjoint(); }

Matrix psi_x() {
  Vector v(2);
  v << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  return pure(v);
}

Matrix psi_y() {
  Vector v(2);
  v << 1.0 / std::sqrt(2.0), Complex(0.0, 1.0 / std::sqrt(2.0));
  return pure(v);
}

Matrix bloch_state(double theta, double phi) {
  Vector v(2);
  v << std::cos(theta / 2), std::polar(std::sin(theta / 2), phi);
  return pure(v);
}

ForgetfulSpec jordan_spec() {
  ForgetfulSpec s{2, 2, 2, {}, RealVector::Zero(3), 0.0};
  Matrix j = Matrix::Zero(3, 3);
  j(0, 1) = j(1, 2) = 1.0;
  s.j.assign(4, j);
  return s;
}

}  // namespace

TEST(extract_branch, cdc_baseline_has_zero_tails) {
  std::vector<Matrix> blocks(4, Matrix::Zero(4, 4));
  blocks[0](0, 0) = 1.0;
  const auto f = extract_branch(memory_from_blocks(2, 2, 2, blocks));
  for (const auto& x : f.reduced) EXPECT_EQ(x.norm(), 0.0);
}

TEST(extract_branch, counterexample_blocks) {
  const double a = 0.1, b = 0.2;
  const auto f = extract_branch(counterexample_channel(a, b));
  Matrix x2(3, 3), x3(3, 3);
  x2 << 0, 0, 0, -a, 0, 0, 0, a, 0;
  x3 << 0, b, 0, 0, 0, b, 0, 0, 0;
  EXPECT_LT((f.reduced[1] - x2).norm(), 1e-15);
  EXPECT_LT((f.reduced[2] - x3).norm(), 1e-15);
  EXPECT_EQ(f.reduced[0].norm(), 0.0);
  EXPECT_EQ(f.reduced[3].norm(), 0.0);
  EXPECT_DOUBLE_EQ(f.blocks[0](0, 0).real(), 1.0);
}

TEST(parameterized_branch, reconstruction_matches_direct_partial_trace) {
  Rng rng(1);
  for (int s = 0; s < 5; ++s) {
    const int dm = 2, da = 2 + s % 2, db = 2 + (s / 2) % 2;
    // Random CPTP map M (x) A -> B (x) M via a random isometry.
    const Matrix v = random_unitary(rng, db * dm * dm * da).leftCols(dm * da);
    std::vector<Matrix> ks;
    for (int e = 0; e < dm * da / db + 1; ++e) {
      if ((e + 1) * db * dm > v.rows()) break;
      ks.push_back(v.middleRows(e * db * dm, db * dm));
    }
    const MemoryChannel t = memory_from_kraus(ks, dm, da, db);
    const auto f = extract_branch(t);
    for (int r = 0; r < 20; ++r) {
      const Matrix sigma = random_density_matrix(rng, da);
      EXPECT_LT((parameterized_branch(f, sigma) - branch_by_kraus(ks, dm, db, sigma)).norm(), 1e-12);
    }
  }
}

TEST(parameterized_branch, maximally_mixed_input_uses_only_the_first_block) {
  const auto f = extract_branch(counterexample_channel(0.1, 0.1));
  EXPECT_LT((parameterized_branch(f, identity(2) / 2.0) - f.blocks[0]).norm(), 1e-15);
}

TEST(parameterized_branch, counterexample_psi_x_branch) {
  const double a = 0.1, b = 0.15;
  const auto f = extract_branch(counterexample_channel(a, b));
  const Matrix d = parameterized_branch(f, psi_x());
  EXPECT_LT((d.bottomRightCorner(3, 3) - f.reduced[1]).norm(), 1e-15);
  EXPECT_NEAR(d(0, 0).real(), 1.0, 1e-15);
}

TEST(parameterized_branch, affine_in_sigma) {
  Rng rng(2);
  const auto f = extract_branch(counterexample_channel(0.1, 0.1));
  const Matrix s1 = random_density_matrix(rng, 2), s2 = random_density_matrix(rng, 2);
  const double p = 0.3;
  const Matrix lhs = parameterized_branch(f, p * s1 + (1 - p) * s2);
  const Matrix rhs = p * parameterized_branch(f, s1) + (1 - p) * parameterized_branch(f, s2);
  EXPECT_LT((lhs - rhs).norm(), 1e-14);
  EXPECT_THROW(parameterized_branch(f, identity(2)), Error);
}

TEST(branch_concatenation, empty_sequence_is_identity) {
  const auto f = extract_branch(counterexample_channel(0.1, 0.1));
  EXPECT_EQ((branch_concatenation(f, {}) - identity(4)).norm(), 0.0);
}

TEST(branch_concatenation, forgetful_construction_reaches_cdc) {
  const auto f = extract_branch(construct_strictly_forgetful(jordan_spec()));
  const std::vector<Matrix> mixed(3, identity(2) / 2.0);
  Matrix cdc = Matrix::Zero(4, 4);
  cdc(0, 0) = 1.0;
  EXPECT_LT((branch_concatenation(f, mixed) - cdc).norm(), 1e-14);
  const std::vector<Matrix> two(2, identity(2) / 2.0);
  EXPECT_GT((branch_concatenation(f, two) - cdc).norm(), 1e-3);
}

TEST(branch_concatenation, counterexample_alternating_inputs) {
  const double a = 0.2, b = 0.3;
  const auto f = extract_branch(counterexample_channel(a, b));
  for (int n = 1; n <= 6; ++n) {
    std::vector<Matrix> seq;
    for (int i = 0; i < n; ++i) {
      seq.push_back(psi_y());
      seq.push_back(psi_x());
    }
    Matrix expected = Matrix::Zero(4, 4);
    expected(0, 0) = 1.0;
    expected(2, 2) = std::pow(-a * b, n);
    expected(3, 3) = std::pow(a * b, n);
    EXPECT_LT((branch_concatenation(f, seq) - expected).cwiseAbs().maxCoeff(), 1e-12) << "n=" << n;
  }
}

TEST(branch_concatenation, agrees_with_dense_simulation) {
  Rng rng(3);
  for (const MemoryChannel& t : {construct_strictly_forgetful(jordan_spec()), counterexample_channel(0.1, 0.1)}) {
    const auto f = extract_branch(t);
    const auto kraus = t.kraus();
    for (int s = 0; s < 5; ++s) {
      const int n = 1 + s % 4;
      std::vector<Matrix> sigmas;
      Matrix sys = Matrix::Ones(1, 1);
      for (int i = 0; i < n; ++i) {
        sigmas.push_back(random_density_matrix(rng, 2));
        sys = kron(sys, sigmas.back());
      }
      const Matrix omega = random_density_matrix(rng, 2);
      const Matrix dense = concatenate_dense(t, kraus, omega, sys, n);
      const auto& mb = *t.memory_basis();
      const Matrix via_branch = mb.operator_from(branch_concatenation(f, sigmas) * mb.coordinates(omega));
      EXPECT_LT((dense - via_branch).norm(), 1e-10);
    }
  }
}

TEST(decide_nilpotent, zero_generators) {
  const auto v = decide_nilpotent({Matrix::Zero(3, 3), Matrix::Zero(3, 3)});
  EXPECT_TRUE(v.nilpotent);
  EXPECT_EQ(v.depth, 1);
}

TEST(decide_nilpotent, flag_basis_triangularizes) {
  Rng rng(4);
  const Matrix u = random_unitary(rng, 4);
  std::vector<Matrix> gens;
  for (int g = 0; g < 3; ++g) {
    Matrix n = random_ginibre(rng, 4, 4).triangularView<Eigen::StrictlyUpper>();
    gens.push_back(u * n * u.adjoint());
  }
  const auto v = decide_nilpotent(gens);
  ASSERT_TRUE(v.nilpotent);
  EXPECT_LE(v.depth, 4);
  const Matrix& q = *v.flag_basis;
  EXPECT_LT((q.adjoint() * q - identity(4)).norm(), 1e-12);
  for (const auto& g : gens) {
    const Matrix t = q.adjoint() * g * q;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c <= r; ++c) EXPECT_LT(std::abs(t(r, c)), 1e-10);
  }
}

TEST(decide_nilpotent, agrees_with_word_enumeration) {
  Rng rng(5);
  for (int s = 0; s < 60; ++s) {
    std::vector<Matrix> gens;
    const Matrix u = random_unitary(rng, 3);
    for (int g = 0; g < 4; ++g) {
      Matrix n = random_ginibre(rng, 3, 3).triangularView<Eigen::StrictlyUpper>();
      if (s % 3 == 1) n(0, 2) = 0.0, n(1, 2) = 0.0;
      if (s % 3 == 2 && g == s % 4) n += 1e-2 * random_ginibre(rng, 3, 3);
      gens.push_back(u * n * u.adjoint());
    }
    const auto v = decide_nilpotent(gens);
    const int by_words = oracle::nilpotency_index_by_words(gens, 3, 1e-9);
    EXPECT_EQ(v.nilpotent, by_words > 0) << "sample " << s;
    if (v.nilpotent) EXPECT_EQ(v.depth, by_words);
    else {
      ASSERT_FALSE(v.witness_word.empty());
      Matrix w = identity(3);
      for (int g : v.witness_word) w = w * gens[static_cast<std::size_t>(g)];
      EXPECT_GT(std::abs(matrix_power(w, v.witness_power).trace()), 1e-9);
    }
  }
}

TEST(is_strictly_forgetful, counterexample_is_not) {
  const auto v = is_strictly_forgetful(counterexample_channel(0.1, 0.1));
  EXPECT_FALSE(v.strictly_forgetful);
  EXPECT_FALSE(v.memory_depth.has_value());
  EXPECT_EQ(v.witness, (std::vector<int>{2, 3}));
  EXPECT_EQ(v.witness_power, 2);
}

TEST(construct_strictly_forgetful, maximal_jordan_tail) {
  const auto built = construct_strictly_forgetful_scaled(jordan_spec());
  EXPECT_GT(built.eta, 0.0);
  const auto cp = built.channel.completely_positive();
  EXPECT_TRUE(cp.completely_positive);
  EXPECT_GE(cp.min_eigenvalue, -1e-9);
  EXPECT_TRUE(built.channel.trace_preserving());
  const auto v = is_strictly_forgetful(built.channel);
  ASSERT_TRUE(v.strictly_forgetful);
  EXPECT_EQ(*v.memory_depth, 3);

  // Random product inputs: CDC after three steps, not after two.
  Rng rng(6);
  const auto f = extract_branch(built.channel);
  bool two_step_differs = false;
  for (int s = 0; s < 20; ++s) {
    std::vector<Matrix> seq;
    for (int i = 0; i < 3; ++i) seq.push_back(random_density_matrix(rng, 2));
    EXPECT_LT(branch_concatenation(f, seq).bottomRightCorner(3, 3).norm(), 1e-14);
    seq.pop_back();
    if (branch_concatenation(f, seq).bottomRightCorner(3, 3).norm() > 1e-6) two_step_differs = true;
  }
  EXPECT_TRUE(two_step_differs);
}

TEST(construct_strictly_forgetful, zero_tail_has_depth_one) {
  ForgetfulSpec s{2, 2, 2, std::vector<Matrix>(4, Matrix::Zero(3, 3)), RealVector::Zero(3), 0.0};
  const auto t = construct_strictly_forgetful(s);
  const auto v = is_strictly_forgetful(t);
  ASSERT_TRUE(v.strictly_forgetful);
  EXPECT_EQ(*v.memory_depth, 1);
}

TEST(construct_strictly_forgetful, nonzero_v_and_mixed_generators) {
  ForgetfulSpec s = jordan_spec();
  s.v << 0.3, -0.2, 0.1;
  s.j[1] = Matrix::Zero(3, 3);
  s.j[1](0, 2) = 1.0;
  s.j[3] = Matrix::Zero(3, 3);
  const auto t = construct_strictly_forgetful(s);
  EXPECT_TRUE(t.completely_positive().completely_positive);
  EXPECT_TRUE(t.trace_preserving());
  const auto v = is_strictly_forgetful(t);
  ASSERT_TRUE(v.strictly_forgetful);
  EXPECT_EQ(*v.memory_depth, 3);
  EXPECT_LE(entangled_input_check(t, 3, 20, 8), 1e-9);
}

TEST(construct_strictly_forgetful, rejects_bad_specs) {
  ForgetfulSpec s = jordan_spec();
  s.j[2](2, 0) = 1.0;
  EXPECT_THROW(construct_strictly_forgetful(s), Error);
  s = jordan_spec();
  s.eta = 5.0;
  try {
    construct_strictly_forgetful(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_completely_positive);
  }
}

TEST(counterexample_channel, per_state_roots_on_bloch_grid) {
  const auto f = extract_branch(counterexample_channel(0.1, 0.1));
  int count = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 20; ++j) {
      const double theta = std::numbers::pi * (i + 0.5) / 10.0, phi = 2 * std::numbers::pi * j / 20.0;
      const Matrix tail = parameterized_branch(f, bloch_state(theta, phi)).bottomRightCorner(3, 3);
      EXPECT_LT(matrix_power(tail, 3).norm(), 1e-15);
      ++count;
    }
  EXPECT_EQ(count, 200);
}

TEST(counterexample_channel, convergence_rate) {
  const double a = 0.2, b = 0.25;
  const auto f = extract_branch(counterexample_channel(a, b));
  Matrix cdc = Matrix::Zero(4, 4);
  cdc(0, 0) = 1.0;
  std::vector<Matrix> seq;
  for (int n = 1; n <= 5; ++n) {
    seq.push_back(psi_y());
    seq.push_back(psi_x());
    const double dist = (branch_concatenation(f, seq) - cdc).norm();
    EXPECT_NEAR(dist, std::sqrt(2.0) * std::pow(a * b, n), 1e-14);
  }
}

TEST(counterexample_channel, infeasible_parameters) {
  EXPECT_THROW(counterexample_channel(2.0, 2.0), Error);
  EXPECT_THROW(counterexample_channel(0.0, 0.1), Error);
}

TEST(entangled_input_check, forgetful_construction_forgets) {
  const auto t = construct_strictly_forgetful(jordan_spec());
  EXPECT_LE(entangled_input_check(t, 3, 30, 1), 1e-9);
  EXPECT_GT(entangled_input_check(t, 2, 30, 1), 1e-6);
}

TEST(entangled_input_check, counterexample_remembers) {
  EXPECT_GT(entangled_input_check(counterexample_channel(0.1, 0.1), 4, 10, 2), 1e-6);
}

TEST(entangled_input_check, zero_steps_is_trace_distance_of_memory_inputs) {
  const auto t = counterexample_channel(0.1, 0.1);
  const std::uint64_t seed = 9;
  Rng rng(split_seed(seed, 0));
  random_pure_state(rng, 1);
  const Vector m1 = random_pure_state(rng, 2), m2 = random_pure_state(rng, 2);
  EXPECT_NEAR(entangled_input_check(t, 0, 1, seed), trace_norm(pure(m1) - pure(m2)), 1e-14);
}

TEST(entangled_input_check, size_cap) {
  try {
    entangled_input_check(counterexample_channel(0.1, 0.1), 9, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::size_cap_exceeded);
  }
}
