#include "wiener/smoothing.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace wiener {
namespace {

SmoothingModel make_model(const CrossCovarianceSpec& spec, const DriftSpec& drift, int n, RGrid grid = {}) {
  const TimeGrid g(1.0, n);
  return {build_covariance(g, spec), drift, TestFunction::gaussian(1.0), grid};
}

TEST(Model, ZeroDriftReproducesNoise) {
  const SmoothingModel m = make_model(CrossCovarianceSpec::scalar(0.3), DriftSpec::zero(), 6);
  const ModelPath p = simulate_path(m, 1, 4);
  EXPECT_LT((p.x1 - p.noise.w1).norm(), 1e-14);
  EXPECT_LT((p.x2 - p.noise.w2).norm(), 1e-14);
  const PathBundle b = simulate_model(m, 1, 8);
  EXPECT_LT((b.x1.row(4).transpose() - p.x1).norm(), 0.0 + 1e-15);
}

TEST(Model, ConstantDriftMean) {
  const SmoothingModel m = make_model(CrossCovarianceSpec::zero(), DriftSpec::constant(0.7, 0.0), 4);
  const PathBundle b = simulate_model(m, 3, 20000);
  const Vector x = b.x1.col(4);
  const double mean = x.mean();
  const double se = std::sqrt((x.array() - mean).square().sum() / (x.size() - 1) / x.size());
  EXPECT_NEAR(mean, 0.7, 4 * se);
}

TEST(Model, ValidateRejectsLargeDrift) {
  SmoothingModel m = make_model(CrossCovarianceSpec::zero(), DriftSpec::linear(1.5, 0.0), 4);
  EXPECT_THROW(validate(m), std::invalid_argument);
  m.drift = DriftSpec::preset("tanh", 0.2);
  EXPECT_NO_THROW(validate(m));
}

TEST(Smoother, ZeroDriftMatchesGaussianConditioning) {
  const SmoothingModel m = make_model(CrossCovarianceSpec::exponential_volterra(TimeGrid(1.0, 6), 0.6, 1.0),
                                      DriftSpec::zero(), 6);
  const Matrix B = oracle::w1_given_w2_regression(m.cov.grid, m.cov.V);
  const IntegratorProcess gamma = regress_gamma(m.cov);
  for (std::uint64_t k = 0; k < 3; ++k) {
    const ModelPath obs = simulate_path(m, 8, k);
    const int t = 4;
    const SmootherOutput out = bayes_smoother(m, obs.x2, t, 9 + k, 20000);
    const double mu = B.row(t).dot(obs.x2.tail(6));
    const double var = m.cov.grid.time(t) - gamma.variance(t);
    EXPECT_NEAR(out.psi, oracle::heat_gaussian(1.0, mu, var), 3 * out.standard_error);
    for (int i = 0; i <= 6; ++i) EXPECT_NEAR(out.pi.row(i).sum(), 1.0, 1e-12);
    EXPECT_FALSE(out.unreliable);
  }
}

TEST(Smoother, UninformativeObservation) {
  const SmoothingModel m = make_model(CrossCovarianceSpec::zero(), DriftSpec::preset("tanh", 0.3), 8);
  const oracle::McSurface fk = oracle::feynman_kac(m.drift.a1.value, m.f.value, RGrid{0.0, 1.0, 2}, m.cov.grid, 1,
                                                   100000, 4);
  for (std::uint64_t k = 0; k < 2; ++k) {
    const ModelPath obs = simulate_path(m, 2, k);
    const SmootherOutput out = bayes_smoother(m, obs.x2, 8, 5, 20000);
    EXPECT_NEAR(out.psi, fk.mean(8, 0), 3 * std::hypot(out.standard_error, fk.standard_error(8, 0)));
  }
}

TEST(Smoother, RejectsBadInput) {
  const SmoothingModel m = make_model(CrossCovarianceSpec::zero(), DriftSpec::zero(), 4);
  EXPECT_THROW(bayes_smoother(m, Vector::Zero(3), 1, 1, 100), std::invalid_argument);
  EXPECT_THROW(bayes_smoother(m, Vector::Zero(5), 9, 1, 100), std::invalid_argument);
}

TEST(Spde, HeatEquationWithoutNoiseOrDrift) {
  const SmoothingModel m = make_model(CrossCovarianceSpec::zero(), DriftSpec::zero(), 32, RGrid{-8.0, 8.0, 64});
  const SpdeField u = solve_spde(m, SpdeOptions{});
  const Matrix mean = u.mean();
  for (int t = 0; t <= 32; t += 4)
    for (int r = 8; r < 56; ++r)
      EXPECT_NEAR(mean(t, r), oracle::heat_gaussian(1.0, m.r_grid.r(r), m.cov.grid.time(t)), 0.02);
  EXPECT_EQ(u.U[32][20].effective_degree(1e-14), 0);
}

TEST(Spde, RejectsUnstableStep) {
  const SmoothingModel m = make_model(CrossCovarianceSpec::zero(), DriftSpec::zero(), 4, RGrid{-1.0, 1.0, 17});
  EXPECT_THROW(solve_spde(m, SpdeOptions{}), std::invalid_argument);
  SpdeOptions o;
  o.substeps = 32;
  EXPECT_NO_THROW(solve_spde(m, o));
}

TEST(Spde, ShortcutNeedsVanishingA2) {
  const SmoothingModel m = make_model(CrossCovarianceSpec::scalar(0.3), DriftSpec::tanh_sin(0.1, 0.1), 4);
  EXPECT_THROW(solve_spde(m, SpdeOptions{}), std::invalid_argument);
}

TEST(Spde, StaysInObservationSubalgebra) {
  const SmoothingModel m = make_model(CrossCovarianceSpec::scalar(0.5), DriftSpec::preset("tanh", 0.2), 8, RGrid{-6.0, 6.0, 25});
  const SpdeField u = solve_spde(m, SpdeOptions{});
  EXPECT_EQ(u.U[8][12].basis(), Basis::kObservation);
  EXPECT_EQ(u.U[8][12].dim(), 8);
  EXPECT_GT(norm_sq(u.U[8][12]) - u.U[8][12].mean() * u.U[8][12].mean(), 0.0);
}

TEST(Spde, IncrementModesAgreeOnLinearGamma) {
  const SmoothingModel m = make_model(CrossCovarianceSpec::scalar(0.5), DriftSpec::zero(), 8, RGrid{-6.0, 6.0, 25});
  SpdeOptions a, b;
  b.increment = IncrementMode::kProductMinusTrace;
  const SpdeField ua = solve_spde(m, a), ub = solve_spde(m, b);
  EXPECT_LT(norm_sq(ua.U[8][12] - ub.U[8][12]), 1e-20);
}

TEST(Kolmogorov, BrownianPreset) {
  const KolmogorovReport rep = kolmogorov_check(KolmogorovProblem::brownian(), KolmogorovOptions{5000, 64, 3});
  EXPECT_TRUE(rep.passed()) << rep.worst_ratio;
  EXPECT_NEAR(rep.phi(4, 0), oracle::heat_gaussian(0.75, 0.0, 1.0), 0.02);
}

TEST(Kolmogorov, RejectsMisalignedGrid) {
  EXPECT_THROW(kolmogorov_check(KolmogorovProblem::brownian(), KolmogorovOptions{10, 60, 1}), std::invalid_argument);
}

}  // namespace
}  // namespace wiener
