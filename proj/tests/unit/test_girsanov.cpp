#include "wiener/girsanov.hpp"
#include "wiener/rng.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace wiener {
namespace {

CovModel volterra_model(int n, double rho = 0.5) {
  const TimeGrid g(1.0, n);
  return build_covariance(g, CrossCovarianceSpec::exponential_volterra(g, rho, 1.5));
}

TEST(Drift, PresetsAndSmallness) {
  EXPECT_THROW(DriftSpec::preset("cubic", 0.1), std::invalid_argument);
  const CovModel cov = volterra_model(8);
  EXPECT_NO_THROW(check_smallness(DriftSpec::tanh_sin(0.1, 0.1), cov));
  EXPECT_THROW(check_smallness(DriftSpec::linear(2.0, 2.0), cov), std::invalid_argument);
  EXPECT_EQ(smallness_value(DriftSpec::zero(), cov), 0.0);
}

TEST(ShiftDensity, ZeroShiftIsOne) {
  const CovModel cov = volterra_model(4);
  EXPECT_EQ(shift_density(Vector::Zero(8), sample_pair(cov, 1, 2), cov), 1.0);
}

TEST(ShiftDensity, PathFormAgrees) {
  const CovModel cov = volterra_model(6);
  CounterRng rng(3, 3);
  for (std::uint64_t s = 0; s < 10; ++s) {
    Vector h(12);
    for (int i = 0; i < 12; ++i) h(i) = 0.3 * rng.normal();
    const NoiseSample ns = sample_pair(cov, 2, s);
    EXPECT_NEAR(shift_density(h, ns, cov), shift_density_paths(h, ns.w1, ns.w2, cov), 1e-10);
  }
}

TEST(ShiftDensity, CameronMartinAgainstGaussianRatio) {
  const CovModel cov = build_covariance(TimeGrid(1.0, 5), CrossCovarianceSpec::zero());
  Vector h = Vector::Zero(10);
  h.head(5) << 0.2, -0.1, 0.4, 0.0, 0.3;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const NoiseSample ns = sample_pair(cov, 7, s);
    const double cm = std::exp(h.head(5).dot(ns.xi.head(5)) - 0.5 * h.squaredNorm());
    EXPECT_NEAR(shift_density(h, ns, cov), cm, 1e-12);
    EXPECT_NEAR(shift_density(h, ns, cov), oracle::gaussian_shift_ratio(cov.S, h, ns.xi), 1e-8);
  }
}

TEST(Jacobian, BlockStructure) {
  const CovModel cov = volterra_model(5);
  const NoiseSample ns = sample_pair(cov, 1, 1);
  const DriftJacobian zero = drift_jacobian(DriftSpec::zero(), ns, cov);
  EXPECT_TRUE(zero.h.isZero(0.0));
  EXPECT_TRUE(zero.Dh.isZero(0.0));
  const DriftJacobian lin = drift_jacobian(DriftSpec::linear(0.2, 0.0), ns, cov);
  const double dt = cov.grid.dt();
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(lin.Dh(i, j), j < i ? 0.2 * dt : 0.0);
  const DriftJacobian ts = drift_jacobian(DriftSpec::tanh_sin(0.1, 0.1), ns, cov);
  EXPECT_TRUE(ts.Dh.rightCols(5).isZero(0.0));
}

TEST(Jacobian, MatchesFiniteDifferenceOfDrift) {
  const CovModel cov = volterra_model(4);
  const DriftSpec d = DriftSpec::tanh_sin(0.3, 0.2);
  const NoiseSample ns = sample_pair(cov, 2, 5);
  const DriftJacobian dj = drift_jacobian(d, ns, cov);
  const double eps = 1e-6;
  for (int j = 0; j < 8; ++j) {
    Vector xp = ns.xi, xm = ns.xi;
    xp(j) += eps;
    xm(j) -= eps;
    const Vector col = (drift_vector(d, xp, 4, cov.grid.dt()) - drift_vector(d, xm, 4, cov.grid.dt())) / (2 * eps);
    EXPECT_LT((col - dj.Dh.col(j)).norm(), 1e-8);
  }
}

TEST(Det2, KnownValues) {
  EXPECT_DOUBLE_EQ(det2(Matrix::Zero(4, 4)).value, 1.0);
  Matrix L = Matrix::Random(5, 5).triangularView<Eigen::StrictlyLower>();
  EXPECT_NEAR(det2(L).value, 1.0, 1e-14);
  Vector lam(3);
  lam << 0.3, -0.2, 0.5;
  double expected = 1.0;
  for (int i = 0; i < 3; ++i) expected *= (1 + lam(i)) * std::exp(-lam(i));
  const Matrix D = lam.asDiagonal();
  EXPECT_NEAR(det2(D).value, expected, 1e-14);
  EXPECT_NEAR(det2_eigen(D).value, expected, 1e-14);
  const Matrix M = 0.3 * Matrix::Random(6, 6);
  EXPECT_NEAR(det2(M).value, det2_eigen(M).value, 1e-10);
  EXPECT_TRUE(det2(-2.0 * Matrix::Identity(1, 1)).singular);
}

TEST(Det2, DriftTransformIsUnimodular) {
  const CovModel cov = volterra_model(8);
  for (const auto& d : {DriftSpec::tanh_sin(0.1, 0.1), DriftSpec::linear(0.2, 0.1), DriftSpec::tanh_linear(0.2, 0.2)})
    for (std::uint64_t s = 0; s < 10; ++s) {
      const DriftJacobian dj = drift_jacobian(d, sample_pair(cov, 3, s), cov);
      EXPECT_NEAR(det2(cov.S * dj.Dh).value, 1.0, 1e-8);
      EXPECT_NEAR(det2_drift(cov, dj.Dh).value, 1.0, 1e-8);
    }
}

TEST(QuasiNilpotence, Curves) {
  const Matrix L = Matrix::Random(6, 6).triangularView<Eigen::StrictlyLower>();
  const QuasiNilpotence q = quasinilpotence_certificate(L, 8);
  for (int k = 6; k <= 8; ++k) EXPECT_EQ(q.curve[static_cast<std::size_t>(k - 1)], 0.0);
  for (double c : quasinilpotence_certificate(Matrix::Identity(4, 4), 5).curve) EXPECT_NEAR(c, 1.0, 1e-14);

  const CovModel cov = volterra_model(8);
  const DriftSpec d = DriftSpec::tanh_sin(0.2, 0.2);
  const DriftJacobian dj = drift_jacobian(d, sample_pair(cov, 4, 0), cov);
  const QuasiNilpotence b = quasinilpotence_certificate(cov, d, dj.Dh, 16);
  for (std::size_t k = 0; k < b.curve.size(); ++k) EXPECT_LE(b.curve[k], b.bound[k]);
}

TEST(Density, ZeroDriftIsOne) {
  const CovModel cov = volterra_model(4);
  const DensityEval e = density_p(DriftSpec::zero(), sample_pair(cov, 1, 0), cov);
  EXPECT_EQ(e.value, 1.0);
  EXPECT_EQ(e.zeta, 1.0);
}

TEST(Density, MatchesChangeOfVariablesOracle) {
  const CovModel cov = volterra_model(4);
  for (const auto& d : {DriftSpec::tanh_sin(0.1, 0.1), DriftSpec::linear(0.3, -0.2), DriftSpec::constant(0.5, -0.4)})
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Vector y = sample_pair(cov, 9, s).xi;
      const auto ref = oracle::exact_density(d, y, cov.S, 4, cov.grid.dt());
      ASSERT_TRUE(ref.has_value());
      const DensityEval e = density_p(d, y, cov);
      EXPECT_NEAR(e.value / *ref, 1.0, 1e-6);
      EXPECT_NEAR(e.value, e.zeta * std::exp(e.divergence_term - e.quadratic_term), 1e-12 * e.value);
    }
}

TEST(Density, ConstantDriftIsAShift) {
  const CovModel cov = volterra_model(4);
  const DriftSpec d = DriftSpec::constant(0.4, -0.3);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const NoiseSample ns = sample_pair(cov, 6, s);
    const Vector h = drift_vector(d, ns.xi, 4, cov.grid.dt());
    EXPECT_NEAR(density_p(d, ns, cov).value, shift_density(h, ns, cov), 1e-12);
  }
}

TEST(Density, EulerMapInvertsByDriftSubtraction) {
  const CovModel cov = volterra_model(6);
  const DriftSpec d = DriftSpec::tanh_linear(0.3, 0.2);
  const Vector xi = sample_pair(cov, 1, 3).xi;
  const Vector y = euler_map(d, xi, cov);
  EXPECT_LT((y - drift_vector(d, y, 6, cov.grid.dt()) - xi).norm(), 1e-13);
}

TEST(Density, HasUnitMean) {
  const CovModel cov = volterra_model(8);
  const DriftSpec d = DriftSpec::tanh_sin(0.2, 0.2);
  const int m = 20000;
  double s1 = 0.0, s2 = 0.0;
  for (int k = 0; k < m; ++k) {
    const double p = density_p(d, sample_pair(cov, 5, static_cast<std::uint64_t>(k)), cov).value;
    s1 += p;
    s2 += p * p;
  }
  const double mean = s1 / m;
  EXPECT_NEAR(mean, 1.0, 4.0 * std::sqrt((s2 / m - mean * mean) / m));
}

}  // namespace
}  // namespace wiener
