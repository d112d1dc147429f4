#include "wiener/gsro.hpp"
#include "wiener/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wiener {
namespace {

Matrix random_contraction(int d, std::uint64_t seed, double scale = 1.0) {
  CounterRng rng(seed, 0);
  Matrix C(d, d);
  for (Eigen::Index i = 0; i < C.size(); ++i) C.data()[i] = rng.normal();
  return C * (scale / operator_norm(C));
}

// Adapted integrand x_j = polynomial in the correlated coordinates of cells < j, written in
// whitened coordinates.
VectorChaos adapted_integrand(const CovModel& cov, int K, std::uint64_t seed) {
  const int n = cov.n();
  CounterRng rng(seed, 1);
  VectorChaos x;
  for (int j = 0; j < n; ++j) {
    ChaosVector v(2 * n, K, Basis::kCorrelated);
    v.degree(0)[0] = rng.normal();
    for (int k = 1; k <= K; ++k) {
      const auto& t = v.table(k);
      for (std::size_t p = 0; p < t.size(); ++p) {
        bool past = true;
        for (int c : t.index(p)) past = past && (c % n) < j;
        if (past) v.degree(k)[p] = rng.normal() / factorial(k);
      }
    }
    x.components.push_back(substitute(v, cov.S_half, Basis::kWhitened));
  }
  return x;
}

TEST(Gsro, ItoOnDeterministicInput) {
  const CovModel cov = build_covariance(TimeGrid(1.0, 6), CrossCovarianceSpec::scalar(0.3));
  const Gsro A = ito_gsro(cov);
  Vector phi(6);
  phi << 1.0, -0.5, 0.25, 2.0, 0.0, 1.5;
  const VectorChaos y = gsro_apply(A, phi, 2);
  double partial = 0.0;
  for (int o = 0; o < 6; ++o) {
    partial += phi(o) * phi(o);
    EXPECT_NEAR(norm_sq(y[o]), partial, 1e-12);
  }
}

TEST(Gsro, ZeroKernelIsZero) {
  const CovModel cov = build_covariance(TimeGrid(1.0, 4), CrossCovarianceSpec::zero());
  const Gsro A = gsro_from_kernel(std::vector<Matrix>(4, Matrix::Zero(4, 4)), cov.S_half.topRows(4));
  const VectorChaos y = gsro_apply(A, Vector::Ones(4), 2);
  for (int o = 0; o < 4; ++o) EXPECT_EQ(norm_sq(y[o]), 0.0);
}

TEST(Gsro, ItoMatchesPathwiseSum) {
  const CovModel cov = build_covariance(TimeGrid(1.0, 5), CrossCovarianceSpec::scalar(0.4));
  const VectorChaos x = adapted_integrand(cov, 2, 3);
  const VectorChaos y = gsro_apply(ito_gsro(cov), x);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const NoiseSample ns = sample_pair(cov, 4, s);
    double ito = 0.0;
    for (int j = 0; j < 5; ++j) {
      ito += evaluate(x[j], ns.xi_prime) * ns.xi(j);
      EXPECT_NEAR(evaluate(y[j], ns.xi_prime), ito, 1e-10);
    }
  }
}

TEST(Gsro, WhitenedItoIsDivergence) {
  const TimeGrid g(1.0, 3);
  VectorChaos x(6, 6, 2);
  CounterRng rng(5, 5);
  for (auto& c : x.components)
    for (int k = 0; k <= 2; ++k)
      for (double& a : c.degree(k)) a = rng.normal();
  const VectorChaos y = gsro_apply(whitened_ito_gsro(g), x);
  EXPECT_LT(norm_sq(y[2] - divergence(x)), 1e-20);
}

TEST(Gsro, Commutation) {
  const CovModel cov = build_covariance(TimeGrid(1.0, 4), CrossCovarianceSpec::scalar(0.5));
  const Gsro A = ito_gsro(cov);
  const VectorChaos x = adapted_integrand(cov, 2, 8);
  for (const Matrix& C : {Matrix(Matrix::Identity(8, 8)), Matrix(Matrix::Zero(8, 8)), conditional_projector(cov),
                          random_contraction(8, 2)})
    EXPECT_LT(commutation_check(C, A, x), 1e-8);
}

TEST(Integrator, BrownianConstantIsOne) {
  const CovModel cov = build_covariance(TimeGrid(1.0, 8), CrossCovarianceSpec::zero());
  const IntegratorBound b = integrator_bound(IntegratorProcess{cov.grid, w1_rows(cov), 1.0}, 1000, 1);
  EXPECT_NEAR(b.exact, 1.0, 1e-12);
  EXPECT_LE(b.trial_max, b.exact + 1e-12);
}

TEST(Integrator, TransportedBrownianIsContractive) {
  const CovModel cov = build_covariance(TimeGrid(1.0, 8), CrossCovarianceSpec::exponential_volterra(TimeGrid(1.0, 8), 0.5, 1.0));
  for (std::uint64_t s = 0; s < 5; ++s) {
    const IntegratorProcess g = transported_integrator(cov, random_contraction(16, s));
    EXPECT_LE(g.bound_constant, 1.0 + 1e-10);
    for (int k = 0; k <= 8; ++k) EXPECT_LE(g.variance(k), cov.grid.time(k) + 1e-12);
  }
}

TEST(Fbm, RejectsHurstOutsideRange) {
  EXPECT_THROW(fbm_kernel(0.5, TimeGrid(1.0, 8)), std::invalid_argument);
  EXPECT_THROW(fbm_kernel(1.0, TimeGrid(1.0, 8)), std::invalid_argument);
}

TEST(Fbm, GridCovarianceMatchesFormula) {
  const TimeGrid g(1.0, 64);
  for (double a : {0.6, 0.75, 0.9}) {
    const FbmKernel k = fbm_kernel(a, g);
    const Matrix cov = g.dt() * k.kernel * k.kernel.transpose();
    EXPECT_NEAR(cov(64, 64), 1.0, 1e-12);
    for (int i = 4; i <= 64; i += 4)
      for (int j = 4; j <= i; j += 4) EXPECT_NEAR(cov(i, j), k.covariance(g.time(j), g.time(i)), 0.03);
    for (int i = 1; i <= 64; ++i) EXPECT_EQ(k.kernel(0, i - 1), 0.0);
  }
  EXPECT_NEAR(fbm_kernel(0.75, g).covariance(0.5, 0.5), 0.35355339059327373, 1e-15);
}

TEST(Fbm, KernelCsvHasHeader) {
  std::ostringstream os;
  write_kernel_csv(os, fbm_kernel(0.7, TimeGrid(1.0, 4)));
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')).find("t"), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
}

TEST(Fbm, IntegratorConstantIsFinite) {
  for (int n : {8, 16}) {
    const CovModel cov = build_covariance(TimeGrid(1.0, n), CrossCovarianceSpec::zero());
    const IntegratorProcess b = fbm_integrator(fbm_kernel(0.75, cov.grid), cov);
    EXPECT_TRUE(std::isfinite(b.bound_constant));
    EXPECT_GT(b.bound_constant, 0.0);
  }
}

}  // namespace
}  // namespace wiener
