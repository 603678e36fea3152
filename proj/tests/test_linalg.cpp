#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "qmetro/linalg.hpp"
#include "support/random_instances.hpp"

using namespace qmetro;

namespace {

CVector vec(std::initializer_list<cplx> xs) {
  CVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (auto x : xs) v(i++) = x;
  return v;
}

// Qubit vectors |psi>|0>, o_1, o_2 and the completing a_4, written out by hand.
struct QubitVectors {
  CVector state, o1, o2, a4;
};

QubitVectors qubit_vectors(double alpha, double theta) {
  const cplx I(0.0, 1.0), e = std::exp(I * alpha);
  const double s = std::sin(theta), c = std::cos(theta);
  return {vec({e * s, 0.0, c, 0.0}), 0.5 * vec({I * e * c, -I * e * s, -I * s, -I * c}),
          0.5 * vec({e * c, e * s, -s, c}), vec({0.0, -e * c, 0.0, s})};
}

}  // namespace

TEST(GramSchmidt, NormalizesOrthogonalInput) {
  const auto r = gram_schmidt({vec({1.0, 0.0}), vec({0.0, 2.0})});
  ASSERT_EQ(r.basis.size(), 2u);
  EXPECT_TRUE(r.dropped.empty());
  EXPECT_NEAR(std::abs(r.basis[0](0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(r.basis[1](1) - 1.0), 0.0, 1e-15);
}

TEST(GramSchmidt, ReportsDuplicateAsDropped) {
  const auto r = gram_schmidt({vec({1.0, 0.0}), vec({1.0, 0.0})});
  ASSERT_EQ(r.basis.size(), 1u);
  ASSERT_EQ(r.dropped.size(), 1u);
  EXPECT_EQ(r.dropped[0], 1u);
}

TEST(GramSchmidt, RejectsDimensionMismatch) {
  EXPECT_THROW(gram_schmidt({vec({1.0, 0.0}), vec({1.0, 0.0, 0.0})}), InputError);
}

TEST(GramSchmidt, QubitVectorsGiveDisplayedBasis) {
  const auto q = qubit_vectors(0.4, 1.0);
  const auto r = gram_schmidt({q.state, q.o1, q.o2});
  ASSERT_EQ(r.basis.size(), 3u);
  EXPECT_LT((r.basis[0] - q.state).norm(), 1e-14);
  EXPECT_LT((r.basis[1] - std::sqrt(2.0) * q.o1).norm(), 1e-14);
  EXPECT_LT((r.basis[2] - std::sqrt(2.0) * q.o2).norm(), 1e-14);
}

TEST(GramSchmidt, OutputIsOrthonormalOnRandomInput) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<CVector> vs;
    for (int k = 0; k < 4; ++k) vs.push_back(fixtures::random_state(6, rng) * (1.0 + k));
    const auto r = gram_schmidt(vs);
    const CMatrix G = as_columns(r.basis, 6);
    EXPECT_LT(max_abs(G.adjoint() * G - CMatrix::Identity(4, 4)), 1e-10);
  }
}

TEST(CompleteBasis, StandardVector) {
  const auto b = complete_basis({vec({1.0, 0.0})}, 2);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_LT((b[1] - vec({0.0, 1.0})).norm(), 1e-15);
}

TEST(CompleteBasis, DiagonalVector) {
  const double h = std::sqrt(0.5);
  const auto b = complete_basis({vec({h, h})}, 2);
  EXPECT_NEAR(std::abs(b[0].dot(b[1])), 0.0, 1e-15);
  EXPECT_NEAR(b[1].norm(), 1.0, 1e-15);
}

TEST(CompleteBasis, QubitFourthVector) {
  const auto q = qubit_vectors(0.4, 1.0);
  const auto gs = gram_schmidt({q.state, q.o1, q.o2});
  const auto b = complete_basis(gs.basis, 4);
  ASSERT_EQ(b.size(), 4u);
  const CMatrix A = as_columns(b, 4);
  EXPECT_LT(max_abs(A.adjoint() * A - CMatrix::Identity(4, 4)), 1e-12);
  // The complement is one-dimensional; with sin(theta) > |cos(theta)| the rule picks the hand-written vector.
  EXPECT_LT((b[3] - q.a4).norm(), 1e-12);
}

TEST(CompleteBasis, RejectsNonOrthonormalInput) {
  EXPECT_THROW(complete_basis({vec({1.0, 0.0}), vec({1.0, 0.0})}, 2), InputError);
  EXPECT_THROW(complete_basis({vec({2.0, 0.0})}, 2), InputError);
}

TEST(CompleteBasis, UnitaryOnRandomInput) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dim = 2 + trial % 6;
    std::vector<CVector> vs;
    for (std::size_t k = 0; k < (trial % 3) + 1 && k < dim; ++k) vs.push_back(fixtures::random_state(dim, rng));
    const auto r = gram_schmidt(vs);
    const auto b = complete_basis(r.basis, dim);
    const CMatrix A = as_columns(b, dim);
    const auto d = static_cast<Eigen::Index>(dim);
    EXPECT_LT(max_abs(A.adjoint() * A - CMatrix::Identity(d, d)), 1e-10);
    for (std::size_t k = 0; k < r.basis.size(); ++k) EXPECT_LT((b[k] - r.basis[k]).norm(), 1e-15);
  }
}

TEST(SkewBlock, CanonicalInputIsFixed) {
  RMatrix m(2, 2);
  m << 0, 0.4, -0.4, 0;
  const auto f = skew_block_diagonalize(m);
  ASSERT_EQ(f.betas.size(), 1u);
  EXPECT_NEAR(f.betas[0], 0.4, 1e-14);
  EXPECT_EQ(f.zeros, 0u);
  EXPECT_LT(max_abs(f.P.cwiseAbs() - RMatrix::Identity(2, 2)), 1e-14);
}

TEST(SkewBlock, ZeroMatrix) {
  const auto f = skew_block_diagonalize(RMatrix::Zero(3, 3));
  EXPECT_TRUE(f.betas.empty());
  EXPECT_EQ(f.zeros, 3u);
  EXPECT_LT(max_abs(f.P - RMatrix::Identity(3, 3)), 1e-15);
}

TEST(SkewBlock, RejectsSymmetricPart) {
  RMatrix m(2, 2);
  m << 0, 1, 1, 0;
  EXPECT_THROW(skew_block_diagonalize(m), InputError);
}

// Oracle: eigenvalues of iM from a general (non-Hermitian) complex eigen-solver.
TEST(SkewBlock, RandomFourByFourMatchesEigenOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const RMatrix M = fixtures::random_antisymmetric(4, rng);
    const auto f = skew_block_diagonalize(M);
    EXPECT_LT(max_abs(f.P * M * f.P.transpose() - f.canonical()), 1e-9);

    Eigen::ComplexEigenSolver<CMatrix> ces(cplx(0.0, 1.0) * M.cast<cplx>());
    std::vector<double> oracle, ours;
    for (Eigen::Index i = 0; i < 4; ++i) oracle.push_back(ces.eigenvalues()(i).real());
    for (double b : f.betas) {
      ours.push_back(b);
      ours.push_back(-b);
    }
    for (std::size_t z = 0; z < f.zeros; ++z) ours.push_back(0.0);
    std::sort(oracle.begin(), oracle.end());
    std::sort(ours.begin(), ours.end());
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(ours[i], oracle[i], 1e-9);
  }
}

TEST(SkewBlock, PropertyOverRandomDimensions) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 7);
    RMatrix M = fixtures::random_antisymmetric(n, rng);
    if (trial % 5 == 0) {
      // Force a rank deficiency through a repeated row/column pattern.
      M.row(0).setZero();
      M.col(0).setZero();
    }
    const auto f = skew_block_diagonalize(M);
    const auto k = static_cast<Eigen::Index>(n);
    EXPECT_EQ(2 * f.betas.size() + f.zeros, n);
    EXPECT_LT(max_abs(f.P.transpose() * f.P - RMatrix::Identity(k, k)), 1e-10);
    EXPECT_LT(max_abs(f.P * M * f.P.transpose() - f.canonical()), 1e-9);
    EXPECT_TRUE(std::is_sorted(f.betas.rbegin(), f.betas.rend()));
    for (double b : f.betas) EXPECT_GT(b, 0.0);
  }
}

TEST(SkewBlock, RepeatedPairsAreSplit) {
  RMatrix M = RMatrix::Zero(4, 4);
  M(0, 1) = 0.7;
  M(1, 0) = -0.7;
  M(2, 3) = 0.7;
  M(3, 2) = -0.7;
  const auto f = skew_block_diagonalize(M);
  ASSERT_EQ(f.betas.size(), 2u);
  EXPECT_LT(max_abs(f.P * M * f.P.transpose() - f.canonical()), 1e-12);
  EXPECT_LT(max_abs(f.P.cwiseAbs() - RMatrix::Identity(4, 4)), 1e-12);
}

TEST(SkewBlock, NegativeOrientationFlipsSecondAxis) {
  RMatrix M(2, 2);
  M << 0, -0.5, 0.5, 0;
  const auto f = skew_block_diagonalize(M);
  RMatrix expected(2, 2);
  expected << 1, 0, 0, -1;
  EXPECT_LT(max_abs(f.P - expected), 1e-14);
  EXPECT_NEAR(f.betas[0], 0.5, 1e-14);
}

TEST(DenseFirstColumn, DimensionOne) {
  const RMatrix B = dense_first_column_orthogonal(1);
  ASSERT_EQ(B.rows(), 1);
  EXPECT_EQ(B(0, 0), 1.0);
}

TEST(DenseFirstColumn, DimensionFour) {
  const RMatrix B = dense_first_column_orthogonal(4);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(B(i, 0), 0.5, 1e-15);
  RMatrix hadamard(4, 4);
  hadamard << 1, 1, 1, 1, 1, -1, 1, -1, 1, 1, -1, -1, 1, -1, -1, 1;
  hadamard *= 0.5;
  EXPECT_LT(max_abs(hadamard.transpose() * hadamard - RMatrix::Identity(4, 4)), 1e-15);
  EXPECT_LT(max_abs(hadamard.col(0) - B.col(0)), 1e-15);
}

TEST(DenseFirstColumn, DimensionThree) {
  const RMatrix B = dense_first_column_orthogonal(3);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(B(i, 0), 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_LT(max_abs(B.transpose() * B - RMatrix::Identity(3, 3)), 1e-12);
}

TEST(DenseFirstColumn, PropertyUpToSixtyFour) {
  for (std::size_t d = 1; d <= 64; ++d) {
    const RMatrix B = dense_first_column_orthogonal(d);
    const auto k = static_cast<Eigen::Index>(d);
    EXPECT_LT(max_abs(B.transpose() * B - RMatrix::Identity(k, k)), 1e-12);
    EXPECT_GE(B.col(0).cwiseAbs().minCoeff(), 1.0 / (2.0 * std::sqrt(static_cast<double>(d))));
  }
  EXPECT_THROW(dense_first_column_orthogonal(0), InputError);
}

TEST(Whitening, DiagonalInputGivesInverseSquareRoot) {
  RMatrix F = RMatrix::Zero(2, 2);
  F(0, 0) = 4.0;
  F(1, 1) = 0.25;
  const RMatrix W = whitening(F);
  EXPECT_NEAR(W(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(W(1, 1), 2.0, 1e-15);
  EXPECT_NEAR(W(0, 1), 0.0, 1e-15);
}

TEST(Whitening, WhitensRandomMatrices) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const RMatrix J = fixtures::random_invertible(4, rng);
    const RMatrix F = J * J.transpose();
    const RMatrix W = whitening(F);
    EXPECT_LT(max_abs(W * F * W.transpose() - RMatrix::Identity(4, 4)), 1e-10);
  }
}

TEST(Whitening, BadlyScaledButIdentifiable) {
  RMatrix F = RMatrix::Zero(2, 2);
  F(0, 0) = 4e18;
  F(1, 1) = 1e-18;
  const RMatrix W = whitening(F);
  EXPECT_LT(max_abs(W * F * W.transpose() - RMatrix::Identity(2, 2)), 1e-12);
}

TEST(Whitening, SingularNamesNullDirection) {
  RMatrix F(2, 2);
  F << 1, 1, 1, 1;
  try {
    whitening(F);
    FAIL() << "expected SingularFisherError";
  } catch (const SingularFisherError& e) {
    EXPECT_NE(std::string(e.what()).find("null direction"), std::string::npos);
  }
}
