#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qmetro/fisher.hpp"
#include "qmetro/measurement.hpp"
#include "qmetro/tradeoff.hpp"
#include "support/random_instances.hpp"

using namespace qmetro;

namespace {

double min_eigenvalue(const RMatrix& m) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (m + m.transpose()));
  return es.eigenvalues()(0);
}

ParametrizedMixedState pure_density(const ParametrizedPureState& s) {
  ParametrizedMixedState m;
  m.dim = s.dim;
  m.params = s.params;
  m.label = "pure_density";
  m.rho = [s](const Params& x) {
    const CVector v = s.state_at(x);
    return CMatrix(v * v.adjoint());
  };
  return m;
}

ParametrizedMixedState dephased_qubit(double p) {
  ParametrizedMixedState m;
  m.dim = 2;
  m.params = {0.3, 0.9};
  m.label = "dephased";
  m.rho = [p](const Params& x) {
    const CVector v = qubit_fixture(x[0], x[1]).state();
    CMatrix r = v * v.adjoint();
    r(0, 1) *= 1.0 - p;
    r(1, 0) *= 1.0 - p;
    return r;
  };
  return m;
}

}  // namespace

TEST(SldVectors, QubitNormAtQuarterPi) {
  const auto l = sld_vectors(qubit_fixture(0.0, std::numbers::pi / 4));
  EXPECT_NEAR(l[0].squaredNorm(), 1.0, 1e-12);
  EXPECT_NEAR(l[1].squaredNorm(), 4.0, 1e-12);
}

TEST(SldVectors, OrthogonalToStateForEveryAncilla) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto [dim, n] = fixtures::random_shape(rng);
    const auto s = fixtures::random_instance(dim, n, rng);
    for (std::size_t anc : {1u, 2u, 3u}) {
      const CVector state = extended_state(s, anc);
      for (const auto& l : sld_vectors(s, anc)) EXPECT_LT(std::abs(state.dot(l)), 1e-12);
    }
  }
}

TEST(SldVectors, AncillaComponentIsXi) {
  const auto l = sld_vectors(qubit_fixture(0.3, 0.7), 2);
  ASSERT_EQ(l[0].size(), 4);
  EXPECT_EQ(l[0](1), cplx(0.0));
  EXPECT_EQ(l[0](3), cplx(0.0));
  EXPECT_THROW(sld_vectors(qubit_fixture(0.3, 0.7), 0), InputError);
}

TEST(SldVectors, SqueezedThirdVector) {
  const auto l = sld_vectors(squeezed_fixture(0.2, 0.1, 0.5), 2);
  CVector expected = CVector::Zero(8);
  expected(2 * 2) = -std::sqrt(2.0);
  EXPECT_LT((l[2] - expected).norm(), 1e-14);
}

TEST(MixedSld, PureDensityMatchesPureSld) {
  const auto s = qubit_fixture(0.3, 0.7);
  const auto Ls = mixed_sld_matrices(pure_density(s));
  const CVector psi = s.state();
  for (std::size_t j = 0; j < 2; ++j) {
    const CVector d = s.derivative(j);
    const CMatrix expected = 2.0 * (d * psi.adjoint() + psi * d.adjoint());
    EXPECT_LT(max_abs(Ls[j] - expected), 1e-8);
  }
}

TEST(MixedSld, DiagonalFamilyAtOrigin) {
  ParametrizedMixedState m;
  m.dim = 2;
  m.params = {0.0};
  m.label = "diag";
  m.rho = [](const Params& x) {
    CMatrix r = CMatrix::Zero(2, 2);
    r(0, 0) = 0.5 * (1 + x[0]);
    r(1, 1) = 0.5 * (1 - x[0]);
    return r;
  };
  const CMatrix L = mixed_sld_matrices(m)[0];
  CMatrix expected = CMatrix::Zero(2, 2);
  expected(0, 0) = 1.0;
  expected(1, 1) = -1.0;
  EXPECT_LT(max_abs(L - expected), 1e-9);
}

TEST(MixedSld, ConstantDirectionGivesZero) {
  ParametrizedMixedState m = dephased_qubit(0.2);
  m.params.push_back(5.0);
  auto base = m.rho;
  m.rho = [base](const Params& x) { return base({x[0], x[1]}); };
  EXPECT_LT(max_abs(mixed_sld_matrices(m)[2]), 1e-12);
}

TEST(MixedSld, SolvesLyapunovEquation) {
  const auto m = dephased_qubit(0.35);
  const CMatrix rho = m.density();
  const auto Ls = mixed_sld_matrices(m);
  for (std::size_t j = 0; j < 2; ++j)
    EXPECT_LT(max_abs(0.5 * (rho * Ls[j] + Ls[j] * rho) - m.derivative(j)), 1e-8);
}

TEST(MixedBundle, MatchesTraceFormula) {
  const auto m = dephased_qubit(0.35);
  const auto b = mixed_fisher_bundle(m);
  const CMatrix rho = m.density();
  const auto Ls = mixed_sld_matrices(m);
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t k = 0; k < 2; ++k) {
      const cplx direct = (rho * Ls[j] * Ls[k]).trace();
      EXPECT_NEAR(std::abs(b.F(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) - direct), 0.0, 1e-10);
    }
  EXPECT_TRUE(b.mixed);
}

TEST(MixedBundle, PureLimitMatchesPureBundle) {
  const auto s = qubit_fixture(0.3, 0.7);
  const auto mixed = mixed_fisher_bundle(pure_density(s));
  const auto pure = fisher_bundle(sld_vectors(s));
  EXPECT_LT(max_abs(mixed.F_Q - pure.F_Q), 1e-7);
  EXPECT_LT(max_abs(mixed.F_Im - pure.F_Im), 1e-7);
}

TEST(FisherBundle, Invariants) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 200; ++trial) {
    const auto [dim, n] = fixtures::random_shape(rng);
    const auto b = fisher_bundle(sld_vectors(fixtures::random_instance(dim, n, rng)));
    EXPECT_LT(max_abs(b.F - b.F.adjoint()), 1e-10);
    EXPECT_LT(max_abs(b.F_Im + b.F_Im.transpose()), 1e-10);
    EXPECT_GT(min_eigenvalue(b.F_Q), -1e-10);
  }
}

TEST(FisherBundle, SingleParameterHasNoImaginaryPart) {
  auto s = qubit_fixture(0.3, 0.7);
  const auto l = sld_vectors(s);
  const auto b = fisher_bundle({l[0]});
  ASSERT_EQ(b.F_Im.rows(), 1);
  EXPECT_EQ(b.F_Im(0, 0), 0.0);
}

TEST(FisherBundle, RejectsEmptyInput) { EXPECT_THROW(fisher_bundle({}), InputError); }

TEST(Cfim, QubitOptimalMeasurement) {
  for (double theta : {std::numbers::pi / 4, 0.6, 1.1}) {
    const auto om = construct_optimal_measurement(qubit_fixture(0.2, theta));
    const double s2 = std::sin(2 * theta);
    EXPECT_NEAR(om.cfim.matrix(0, 0), 0.5 * s2 * s2, 1e-10);
    EXPECT_NEAR(om.cfim.matrix(1, 1), 2.0, 1e-10);
    EXPECT_NEAR(om.cfim.matrix(0, 1), 0.0, 1e-10);
  }
}

TEST(Cfim, SingleParameterEigenbasisOfSld) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t dim = 2 + trial % 4;
    const auto s = fixtures::random_instance(dim, 1, rng);
    const CVector psi = s.state();
    const CVector l = sld_vectors(s)[0];
    const CMatrix L = l * psi.adjoint() + psi * l.adjoint();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(L);
    // The SLD spectrum is degenerate on the complement; rotate that eigenspace off the state.
    const CMatrix V = es.eigenvectors();
    const CMatrix U = V.adjoint();
    const auto fc = cfim(psi, {l}, U);
    EXPECT_NEAR(fc.matrix(0, 0), l.squaredNorm(), 1e-9 * std::max(1.0, l.squaredNorm()));
  }
}

TEST(Cfim, RandomMeasurementsStayBelowQuantum) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = fixtures::random_instance(3, 2, rng);
    const auto b = fisher_bundle(sld_vectors(s));
    const auto fc = cfim(s.state(), b.l_vectors, fixtures::haar_unitary(3, rng));
    EXPECT_GT(min_eigenvalue(fc.matrix), -1e-10);
    EXPECT_GT(min_eigenvalue(b.F_Q - fc.matrix), -1e-8);
    EXPECT_NEAR(fc.probabilities.sum(), 1.0, 1e-10);
    EXPECT_LT(fc.dprob.colwise().sum().cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Cfim, ZeroProbabilityOutcomeIsSkipped) {
  const auto s = qubit_fixture(0.0, std::numbers::pi / 2);
  const auto l = sld_vectors(s);
  const auto fc = cfim(s.state(), {l[0]}, CMatrix::Identity(2, 2));
  ASSERT_EQ(fc.skipped.size(), 1u);
  EXPECT_EQ(fc.skipped[0], 1u);
}

TEST(Cfim, VanishingProbabilityWithSlopeIsAnError) {
  const double eps = 1e-7;
  CVector psi(2);
  psi << std::sqrt(1 - eps * eps), eps;
  CVector l(2);
  l << 0.0, 1.0;
  try {
    cfim(psi, {l}, CMatrix::Identity(2, 2));
    FAIL() << "expected SingularOutcomeError";
  } catch (const SingularOutcomeError& e) {
    EXPECT_EQ(e.outcome(), 1u);
  }
}

TEST(Cfim, RejectsDimensionMismatch) {
  const auto s = qubit_fixture(0.3, 0.7);
  EXPECT_THROW(cfim(s.state(), sld_vectors(s), CMatrix::Identity(3, 3)), InputError);
}

TEST(Properties, ReparametrizationInvariance) {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 200; ++trial) {
    const auto [dim, n] = fixtures::random_shape(rng);
    const auto s = fixtures::random_instance(dim, n, rng);
    const auto b = fisher_bundle(sld_vectors(s));
    const CMatrix U = fixtures::haar_unitary(dim, rng);
    const RMatrix J = fixtures::random_invertible(n, rng);
    const auto b2 = reparametrize(b, J);
    const double before = achieved_value(b.F_Q, cfim(s.state(), b.l_vectors, U).matrix);
    const double after = achieved_value(b2.F_Q, cfim(s.state(), b2.l_vectors, U).matrix);
    EXPECT_NEAR(before, after, 1e-8);
    EXPECT_LT(max_abs(b2.F_Q - J * b.F_Q * J.transpose()), 1e-9 * std::max(1.0, max_abs(b2.F_Q)));
  }
}

TEST(Properties, DeviationsSumToFisherDeficit) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    const auto [dim, n] = fixtures::random_shape(rng);
    const auto om = construct_optimal_measurement(fixtures::random_instance(dim, n, rng));
    const auto& canon = om.canonical.bundle;
    const RMatrix Fc = om.canonical.J * om.cfim.matrix * om.canonical.J.transpose();
    double eps2 = 0.0;
    for (std::size_t j = 0; j < canon.n(); ++j)
      eps2 += (om.observables.o_vectors[j] - canon.l_vectors[j]).squaredNorm();
    EXPECT_NEAR(eps2, (canon.F_Q - Fc).trace(), 1e-8);
  }
}
