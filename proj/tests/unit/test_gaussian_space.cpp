#include "wiener/gaussian_space.hpp"
#include "wiener/rng.hpp"

#include "oracles.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

namespace wiener {
namespace {

TEST(TimeGrid, Validates) {
  EXPECT_THROW(TimeGrid(1.0, 1), std::invalid_argument);
  EXPECT_THROW(TimeGrid(-1.0, 4), std::invalid_argument);
  const TimeGrid g(1.0, 8);
  EXPECT_DOUBLE_EQ(g.dt(), 0.125);
  EXPECT_DOUBLE_EQ(g.time(8), 1.0);
}

TEST(Rng, DeterministicPerStream) {
  CounterRng a(3, 5), b(3, 5), c(3, 6);
  const double x = a.normal();
  EXPECT_EQ(x, b.normal());
  EXPECT_NE(x, c.normal());
}

TEST(Covariance, ZeroSpec) {
  const CovModel cov = build_covariance(TimeGrid(1.0, 4), CrossCovarianceSpec::zero());
  EXPECT_TRUE(cov.S.isIdentity(0.0));
  EXPECT_TRUE(cov.Q.isZero(1e-14));
  const Matrix P = conditional_projector(cov);
  Matrix expected = Matrix::Zero(8, 8);
  expected.bottomRightCorner(4, 4).setIdentity();
  EXPECT_TRUE(P.isApprox(expected, 1e-12));
}

TEST(Covariance, ScalarEigenvalues) {
  const CovModel cov = build_covariance(TimeGrid(1.0, 2), CrossCovarianceSpec::scalar(0.5));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov.S);
  std::vector<double> ev(eig.eigenvalues().data(), eig.eigenvalues().data() + 4);
  std::sort(ev.begin(), ev.end());
  EXPECT_NEAR(ev[0], 0.5, 1e-12);
  EXPECT_NEAR(ev[1], 0.5, 1e-12);
  EXPECT_NEAR(ev[2], 1.5, 1e-12);
  EXPECT_NEAR(ev[3], 1.5, 1e-12);
  EXPECT_LT(operator_norm(cov.Q), 1.0);
  EXPECT_LT((cov.S_half * cov.S_half - cov.S).norm(), 1e-10);
  EXPECT_LT((cov.S * cov.S_inv - Matrix::Identity(4, 4)).norm(), 1e-10);
}

TEST(Covariance, RejectsLargeOrNonCausalKernels) {
  const TimeGrid g(1.0, 4);
  EXPECT_THROW(build_covariance(g, CrossCovarianceSpec::scalar(1.0)), std::invalid_argument);
  Matrix k = Matrix::Zero(4, 4);
  k(0, 3) = 0.1;
  EXPECT_THROW(build_covariance(g, CrossCovarianceSpec::volterra(k)), std::invalid_argument);
}

TEST(Covariance, PrefixProjection) {
  const TimeGrid g(1.0, 8);
  EXPECT_LT(prefix_projection_defect(build_covariance(g, CrossCovarianceSpec::scalar(0.4))), 1e-14);
  // A causal kernel still couples w2 on [0, t] to w1 after t through V^T.
  const CovModel vol = build_covariance(g, CrossCovarianceSpec::exponential_volterra(g, 0.5, 2.0));
  EXPECT_GT(prefix_projection_defect(vol), 1e-3);
}

TEST(Covariance, Reconstruction) {
  const TimeGrid g(1.0, 6);
  const CovModel cov = build_covariance(g, CrossCovarianceSpec::exponential_volterra(g, 0.6, 1.5));
  CounterRng rng(1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    Vector phi(12), psi(12);
    for (int i = 0; i < 12; ++i) {
      phi(i) = rng.normal();
      psi(i) = rng.normal();
    }
    const double lhs = (cov.S * phi).dot(psi);
    const double rhs = phi.head(6).dot(psi.head(6)) + phi.tail(6).dot(psi.tail(6)) +
                       phi.head(6).dot(cov.V * psi.tail(6)) + psi.head(6).dot(cov.V * phi.tail(6));
    EXPECT_NEAR(lhs, rhs, 1e-12);
  }
}

TEST(Covariance, NormSplit) {
  Matrix C = Matrix::Random(5, 5);
  C /= 1.2 * operator_norm(C);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Matrix::Identity(5, 5) - C * C.transpose());
  const Matrix root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                      eig.eigenvectors().transpose();
  CounterRng rng(2, 2);
  for (int t = 0; t < 100; ++t) {
    Vector phi(5);
    for (int i = 0; i < 5; ++i) phi(i) = rng.normal();
    EXPECT_NEAR(phi.squaredNorm(), (root * phi).squaredNorm() + (C.transpose() * phi).squaredNorm(), 1e-12);
  }
}

TEST(Sampling, PathsMatchCoordinates) {
  const TimeGrid g(1.0, 4);
  const CovModel cov = build_covariance(g, CrossCovarianceSpec::scalar(0.3));
  const NoiseSample s = sample_pair(cov, 9, 3);
  EXPECT_EQ(s.w1(0), 0.0);
  EXPECT_NEAR(s.w1(2) - s.w1(1), std::sqrt(g.dt()) * s.xi(1), 1e-14);
  EXPECT_NEAR(s.w2(4) - s.w2(3), std::sqrt(g.dt()) * s.xi(7), 1e-14);
  const NoiseSample again = sample_pair(cov, 9, 3);
  EXPECT_EQ((s.xi - again.xi).norm(), 0.0);
}

TEST(Sampling, CrossCovarianceScalar) {
  const TimeGrid g(1.0, 4);
  const double rho = 0.4;
  const CovModel cov = build_covariance(g, CrossCovarianceSpec::scalar(rho));
  const int m = 100000;
  double s1 = 0.0, s2 = 0.0;
  for (int k = 0; k < m; ++k) {
    const NoiseSample s = sample_pair(cov, 11, static_cast<std::uint64_t>(k));
    const double p = s.w1(4) * s.w2(4);
    s1 += p;
    s2 += p * p;
  }
  const double mean = s1 / m;
  const double se = std::sqrt((s2 / m - mean * mean) / m);
  EXPECT_NEAR(mean, rho, 4 * se);
}

TEST(Conditioning, ProjectorProperties) {
  const TimeGrid g(1.0, 6);
  const CovModel cov = build_covariance(g, CrossCovarianceSpec::exponential_volterra(g, 0.5, 1.0));
  const Matrix P = conditional_projector(cov);
  EXPECT_LT((P * P - P).norm(), 1e-10);
  EXPECT_LT((P - P.transpose()).norm(), 1e-10);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(P);
  int rank = 0;
  for (Eigen::Index i = 0; i < P.rows(); ++i) rank += eig.eigenvalues()(i) > 0.5 ? 1 : 0;
  EXPECT_EQ(rank, 6);
}

TEST(Conditioning, GammaMatchesRegressionOracle) {
  const TimeGrid g(1.0, 6);
  for (const auto& spec : {CrossCovarianceSpec::scalar(0.5), CrossCovarianceSpec::exponential_volterra(g, 0.5, 1.0),
                           CrossCovarianceSpec::zero()}) {
    const CovModel cov = build_covariance(g, spec);
    const IntegratorProcess gamma = regress_gamma(cov);
    const Matrix B = oracle::w1_given_w2_regression(g, cov.V);
    for (std::uint64_t s = 0; s < 10; ++s) {
      const NoiseSample x = sample_pair(cov, 5, s);
      const Vector w2 = x.w2.tail(6);
      for (int k = 0; k <= 6; ++k) {
        EXPECT_NEAR(gamma.value(k, x.xi_prime), B.row(k).dot(w2), 1e-8);
        EXPECT_LE(gamma.variance(k), g.time(k) + 1e-12);
      }
      if (spec.kind == CrossCovarianceSpec::Kind::kScalar) {
        for (int k = 0; k <= 6; ++k) EXPECT_NEAR(gamma.value(k, x.xi_prime), 0.5 * x.w2(k), 1e-8);
      }
    }
  }
}

}  // namespace
}  // namespace wiener
