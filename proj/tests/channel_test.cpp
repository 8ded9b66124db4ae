#include "chx/channel.hpp"

#include <gtest/gtest.h>

#include <vector>

#include "chx/basis.hpp"
#include "chx/random.hpp"
#include "support/oracles.hpp"

using namespace chx;

namespace {

Channel random_unital_channel(Rng& rng, int d, const BasisPtr& basis) {
  std::uniform_int_distribution<int> rank(1, d * d);
  return kraus_to_channel(KrausSet(random_unital_kraus(rng, d, rank(rng))), basis);
}

Matrix bistochastic_matrix(int d) {
  Matrix e = Matrix::Zero(d * d, d * d);
  e(0, 0) = 1.0;
  return e;
}

}  // namespace

TEST(basis, pauli_basis_and_duals) {
  const auto b = gellmann_basis(2);
  for (int i = 0; i < 4; ++i) {
    EXPECT_LT((b->element(i) - oracle::pauli(i)).norm(), 1e-15);
    EXPECT_LT((b->dual(i) - oracle::pauli(i) / 2.0).norm(), 1e-15);
  }
}

TEST(basis, gellmann_pairing_is_identity) {
  for (int d : {2, 3, 4, 5}) {
    const auto b = gellmann_basis(d);
    ASSERT_EQ(b->size(), d * d);
    Matrix pairing(d * d, d * d);
    for (int i = 0; i < d * d; ++i)
      for (int j = 0; j < d * d; ++j) pairing(i, j) = (b->dual(i).adjoint() * b->element(j)).trace();
    EXPECT_LT((pairing - Matrix::Identity(d * d, d * d)).norm(), 1e-12) << "d=" << d;
    EXPECT_LT((b->dual(0) - identity(d) / static_cast<double>(d)).norm(), 1e-14);
    EXPECT_TRUE(b->is_identity_first_hermitian());
    for (int i = 1; i < d * d; ++i)
      for (int j = 1; j < d * d; ++j)
        EXPECT_NEAR(std::abs((b->element(i) * b->element(j)).trace()), i == j ? 2.0 : 0.0, 1e-12);
  }
}

TEST(basis, gellmann_rejects_small_dimension) {
  try {
    gellmann_basis(1);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_dimension);
  }
}

TEST(basis, dependent_elements_are_rejected) {
  auto els = gellmann_matrices(2);
  els[3] = els[1];
  EXPECT_THROW(OperatorBasis::from_elements(els), Error);
}

TEST(basis, rescaled_custom_basis_keeps_duals_accurate) {
  auto els = gellmann_matrices(3);
  for (int i = 3; i < 9; ++i) els[i] *= std::pow(1e-3, 3 - i - 1);
  const auto b = OperatorBasis::from_elements(els);
  for (int i = 0; i < 9; ++i)
    EXPECT_NEAR(std::abs((b->dual(i).adjoint() * b->element(i)).trace()), 1.0, 1e-10);
}

TEST(kraus_to_channel, ideal_channel) {
  const auto b = gellmann_basis(3);
  const Channel t = kraus_to_channel(KrausSet({identity(3)}), b);
  EXPECT_LT((t.matrix() - Matrix::Identity(9, 9)).norm(), 1e-14);
}

TEST(kraus_to_channel, pauli_kraus_set_is_the_bistochastic_cdc) {
  std::vector<Matrix> ks;
  for (int i = 0; i < 4; ++i) ks.push_back(oracle::pauli(i) / 2.0);
  const KrausSet k(ks);
  EXPECT_TRUE(k.sums_to_identity_kkdag());
  EXPECT_TRUE(k.sums_to_identity_kdagk());
  const Channel t = kraus_to_channel(k, gellmann_basis(2));
  EXPECT_LT((t.matrix() - bistochastic_matrix(2)).norm(), 1e-14);
}

TEST(kraus_to_channel, unitary_is_orthogonal_on_traceless_block) {
  Rng rng(7);
  for (int d : {2, 3}) {
    const Matrix u = random_unitary(rng, d);
    const Channel t = kraus_to_channel(KrausSet({u}), gellmann_basis(d));
    const Matrix tail = t.matrix().bottomRightCorner(d * d - 1, d * d - 1);
    EXPECT_LT(tail.imag().norm(), 1e-12);
    EXPECT_LT((tail.real().transpose() * tail.real() - RealMatrix::Identity(d * d - 1, d * d - 1)).norm(), 1e-12);
  }
}

TEST(kraus_to_channel, action_matches_kraus_sum) {
  Rng rng(11);
  for (int d : {2, 3, 4}) {
    const auto ks = random_unital_kraus(rng, d, 3);
    for (const auto& basis : {gellmann_basis(d), matrix_unit_basis(d)}) {
      const Channel t = kraus_to_channel(KrausSet(ks), basis);
      const Matrix x = random_ginibre(rng, d, d);
      EXPECT_LT((t.apply(x) - oracle::kraus_action(ks, x)).norm(), 1e-12);
    }
  }
}

TEST(kraus_to_channel, dimension_mismatch) {
  EXPECT_THROW(kraus_to_channel(KrausSet({identity(2)}), gellmann_basis(3)), Error);
}

TEST(channel_to_choi, ideal_channel_is_maximally_entangled_projector) {
  const Channel t = identity_channel(gellmann_basis(2));
  const auto choi = channel_to_choi(t);
  Vector omega = Vector::Zero(4);
  omega(0) = omega(3) = 1.0 / std::sqrt(2.0);
  EXPECT_LT((choi.matrix - omega * omega.adjoint()).norm(), 1e-14);
  EXPECT_EQ(numerical_rank(choi.matrix, 1e-9), 1);
}

TEST(channel_to_choi, cdc_choi_is_identity_tensor_sigma_transpose) {
  Rng rng(3);
  for (int d : {2, 3}) {
    const Matrix sigma = random_density_matrix(rng, d);
    for (const auto& basis : {gellmann_basis(d), matrix_unit_basis(d)}) {
      const auto choi = channel_to_choi(cdc_channel(sigma, basis));
      const Matrix expected = kron(identity(d), sigma.transpose()) / static_cast<double>(d);
      EXPECT_LT((choi.matrix - expected).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(channel_to_choi, matches_action_oracle) {
  Rng rng(5);
  for (int d : {2, 3, 4}) {
    const auto ks = random_unital_kraus(rng, d, 2);
    const Channel t = kraus_to_channel(KrausSet(ks), gellmann_basis(d));
    const Matrix ref = oracle::choi_from_action(d, [&](const Matrix& x) { return oracle::kraus_action(ks, x); });
    EXPECT_LT((channel_to_choi(t).matrix - ref).norm(), 1e-12);
  }
}

TEST(channel_to_choi, round_trip_on_random_channels) {
  Rng rng(2024);
  for (int s = 0; s < 50; ++s) {
    const int d = 2 + s % 3;
    const auto basis = s % 2 ? gellmann_basis(d) : matrix_unit_basis(d);
    const Channel t = random_unital_channel(rng, d, basis);
    const Channel back = choi_to_channel(channel_to_choi(t), basis);
    EXPECT_LT(frobenius_distance(t, back), 1e-10);
  }
}

TEST(choi_to_kraus, cdc_has_full_kraus_rank) {
  for (int d : {2, 3}) {
    const auto k = choi_to_kraus(channel_to_choi(bistochastic_cdc(gellmann_basis(d))));
    EXPECT_EQ(static_cast<int>(k.size()), d * d);
  }
}

TEST(choi_to_kraus, ideal_channel_has_one_operator) {
  const auto k = choi_to_kraus(channel_to_choi(identity_channel(gellmann_basis(3))));
  ASSERT_EQ(k.size(), 1u);
  const Matrix op = k[0];
  const Complex phase = op(0, 0);
  EXPECT_NEAR(std::abs(phase), 1.0, 1e-12);
  EXPECT_LT((op - phase * identity(3)).norm(), 1e-12);
}

TEST(choi_to_kraus, negative_eigenvalue_is_rejected) {
  ChoiOperator choi{2, Matrix::Identity(4, 4) / 4.0, ChoiNormalization::operator_form};
  choi.matrix(3, 3) = -0.01;
  try {
    choi_to_kraus(choi, 1e-9);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_completely_positive);
  }
}

TEST(choi_to_kraus, round_trip_reproduces_superoperator) {
  Rng rng(99);
  for (int s = 0; s < 30; ++s) {
    const int d = 2 + s % 3;
    const auto basis = gellmann_basis(d);
    const Channel t = random_unital_channel(rng, d, basis);
    const Channel back = kraus_to_channel(choi_to_kraus(channel_to_choi(t)), basis);
    EXPECT_LT(frobenius_distance(t, back), 1e-9);
    EXPECT_TRUE(is_completely_positive(t).completely_positive);
  }
}

TEST(is_completely_positive, pauli_diagonal_examples) {
  const auto b = gellmann_basis(2);
  Matrix id = Matrix::Identity(4, 4);
  EXPECT_TRUE(is_completely_positive(Channel(b, Picture::heisenberg, id)).completely_positive);
  Matrix bad = Matrix::Identity(4, 4);
  bad(1, 1) = 0.9;
  bad(2, 2) = 0.9;
  bad(3, 3) = -0.9;
  const auto r = is_completely_positive(Channel(b, Picture::heisenberg, bad));
  EXPECT_FALSE(r.completely_positive);
  EXPECT_LT(r.min_eigenvalue, -0.1);
}

TEST(structural_predicates, bistochastic_cdc) {
  for (int d : {2, 3}) {
    const auto f = structural_predicates(bistochastic_cdc(gellmann_basis(d)));
    EXPECT_TRUE(f.unital);
    EXPECT_TRUE(f.trace_preserving);
  }
}

TEST(structural_predicates, isometric_but_not_coisometric_kraus) {
  Matrix k1 = Matrix::Zero(2, 2), k2 = Matrix::Zero(2, 2);
  k1(0, 0) = 1.0;
  k2(0, 1) = 1.0;  // K1^*K1 + K2^*K2 = 1, K1K1^* + K2K2^* = 2|0><0|
  const KrausSet k({k1, k2});
  EXPECT_TRUE(k.sums_to_identity_kdagk());
  EXPECT_FALSE(k.sums_to_identity_kkdag());
  const auto f = structural_predicates(kraus_to_channel(k, gellmann_basis(2)));
  EXPECT_TRUE(f.unital);
  EXPECT_FALSE(f.trace_preserving);
}

TEST(cdc_channel, matrix_unit_entries) {
  Rng rng(1);
  const int d = 3;
  const Matrix sigma = random_density_matrix(rng, d);
  const Channel t = cdc_channel(sigma, matrix_unit_basis(d));
  for (int n = 0; n < d; ++n)
    for (int m = 0; m < d; ++m)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          const Complex expected = (n == m) ? sigma(l, k) : Complex(0.0);
          EXPECT_LT(std::abs(t.matrix()(n * d + m, k * d + l) - expected), 1e-14);
        }
}

TEST(cdc_channel, maximally_mixed_in_matrix_units) {
  const Channel t = cdc_channel(identity(2) / 2.0, matrix_unit_basis(2));
  EXPECT_NEAR(t.matrix()(0, 0).real(), 0.5, 1e-15);
  EXPECT_NEAR(t.matrix()(0, 3).real(), 0.5, 1e-15);
  EXPECT_NEAR(t.matrix()(1, 1).real(), 0.0, 1e-15);
  EXPECT_LT((power(t, 2).matrix() - t.matrix()).norm(), 1e-14);
}

TEST(cdc_channel, gellmann_maximally_mixed_is_projector) {
  for (int d : {2, 3, 4}) {
    const Channel t = cdc_channel(identity(d) / static_cast<double>(d), gellmann_basis(d));
    EXPECT_LT((t.matrix() - bistochastic_matrix(d)).norm(), 1e-14);
    const auto f = structural_predicates(t);
    EXPECT_TRUE(f.unital && f.trace_preserving);
  }
}

TEST(cdc_channel, rejects_non_states) {
  Matrix bad = identity(2);
  try {
    cdc_channel(bad, gellmann_basis(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_a_state);
  }
}

TEST(compose, order_and_identity) {
  Rng rng(17);
  const auto b = gellmann_basis(2);
  const Channel s = random_unital_channel(rng, 2, b);
  const Channel t = random_unital_channel(rng, 2, b);
  EXPECT_LT(frobenius_distance(compose(t, identity_channel(b)), t), 1e-15);
  // Heisenberg composition "t first, then s" acts on observables as s(t(X)).
  const Matrix x = random_ginibre(rng, 2, 2);
  EXPECT_LT((compose(s, t).apply(x) - s.apply(t.apply(x))).norm(), 1e-12);
  EXPECT_LT(frobenius_distance(power(bistochastic_cdc(b), 2), bistochastic_cdc(b)), 1e-15);
  EXPECT_LT(frobenius_distance(power(t, 0), identity_channel(b)), 1e-15);
}

TEST(compose, mismatches_are_errors) {
  const Channel a = bistochastic_cdc(gellmann_basis(2));
  const Channel b = bistochastic_cdc(matrix_unit_basis(2));
  const Channel c = bistochastic_cdc(gellmann_basis(2), Picture::schrodinger);
  const Channel e = bistochastic_cdc(gellmann_basis(3));
  try {
    compose(a, b);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::basis_mismatch);
  }
  try {
    compose(a, c);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::picture_mismatch);
  }
  EXPECT_THROW(frobenius_distance(a, e), Error);
}

TEST(picture_dual, duality_relation_on_random_pairs) {
  Rng rng(31);
  for (int d : {2, 3}) {
    for (const auto& basis : {gellmann_basis(d), matrix_unit_basis(d)}) {
      const Channel t = random_unital_channel(rng, d, basis);
      const Channel ts = picture_dual(t);
      EXPECT_EQ(ts.picture(), Picture::schrodinger);
      for (int s = 0; s < 100; ++s) {
        const Matrix rho = random_density_matrix(rng, d);
        const Matrix a = random_hermitian(rng, d);
        EXPECT_LT(std::abs((ts.apply(rho) * a).trace() - (rho * t.apply(a)).trace()), 1e-10);
      }
    }
  }
}

TEST(picture_dual, involution_and_fixed_points) {
  Rng rng(41);
  for (int s = 0; s < 50; ++s) {
    const int d = 2 + s % 3;
    const Channel t = random_unital_channel(rng, d, gellmann_basis(d));
    const Channel back = picture_dual(picture_dual(t));
    EXPECT_EQ(back.picture(), t.picture());
    EXPECT_LT(frobenius_distance(back, t), 1e-12);
  }
  const Channel cdc = bistochastic_cdc(gellmann_basis(3));
  EXPECT_LT((picture_dual(cdc).matrix() - cdc.matrix()).norm(), 1e-14);
}

TEST(picture_dual, unitary_conjugation) {
  Rng rng(43);
  const Matrix u = random_unitary(rng, 3);
  const auto b = gellmann_basis(3);
  const Channel t = kraus_to_channel(KrausSet({u}), b);                 // X -> U^* X U
  const Channel expected = kraus_to_channel(KrausSet({u.adjoint()}), b);  // X -> U X U^*
  EXPECT_LT((picture_dual(t).matrix() - expected.matrix()).norm(), 1e-12);
}

TEST(frobenius_distance, examples_and_metric_properties) {
  const auto b = gellmann_basis(2);
  EXPECT_NEAR(frobenius_distance(identity_channel(b), bistochastic_cdc(b)), std::sqrt(3.0), 1e-15);
  Rng rng(51);
  for (int s = 0; s < 20; ++s) {
    const Channel x = random_unital_channel(rng, 2, b), y = random_unital_channel(rng, 2, b),
                  z = random_unital_channel(rng, 2, b);
    EXPECT_EQ(frobenius_distance(x, x), 0.0);
    EXPECT_NEAR(frobenius_distance(x, y), frobenius_distance(y, x), 1e-15);
    EXPECT_LE(frobenius_distance(x, z), frobenius_distance(x, y) + frobenius_distance(y, z) + 1e-12);
  }
}

TEST(channel, change_of_basis_preserves_action) {
  Rng rng(61);
  const Channel t = random_unital_channel(rng, 3, gellmann_basis(3));
  const Channel u = t.in_basis(matrix_unit_basis(3));
  const Matrix x = random_ginibre(rng, 3, 3);
  EXPECT_LT((t.apply(x) - u.apply(x)).norm(), 1e-12);
}
