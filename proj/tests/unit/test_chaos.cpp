#include "wiener/chaos.hpp"
#include "wiener/rng.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace wiener {
namespace {

ChaosVector random_chaos(int dim, int K, std::uint64_t seed, int top = -1) {
  ChaosVector v(dim, K);
  CounterRng rng(seed, 0);
  for (int k = 0; k <= (top < 0 ? K : top); ++k)
    for (double& a : v.degree(k)) a = rng.normal() / factorial(k);
  return v;
}

VectorChaos random_field(int dim, int K, std::uint64_t seed) {
  VectorChaos x;
  for (int h = 0; h < dim; ++h) x.components.push_back(random_chaos(dim, K, seed * 100 + static_cast<std::uint64_t>(h)));
  return x;
}

Vector random_point(int dim, std::uint64_t seed) {
  Vector z(dim);
  CounterRng rng(seed, 7);
  for (int i = 0; i < dim; ++i) z(i) = rng.normal();
  return z;
}

TEST(MultiIndex, SizesAndRanks) {
  MultiIndexTable t(4, 3);
  EXPECT_EQ(t.size(), 20u);
  for (std::size_t pos = 0; pos < t.size(); ++pos) EXPECT_EQ(t.rank(t.index(pos)), pos);
  EXPECT_EQ(binomial(10, 3), 120u);
  EXPECT_DOUBLE_EQ(factorial(5), 120.0);
}

TEST(Chaos, ExpVectorNorm) {
  Vector phi = Vector::Zero(5);
  phi(2) = 1.0;
  const ChaosVector e = exp_vector(phi, 4);
  EXPECT_NEAR(norm_sq(e), 1 + 1 + 0.5 + 1.0 / 6 + 1.0 / 24, 1e-14);
  EXPECT_NEAR(exp_vector_tail_norm_sq(phi, 4), std::exp(1.0) - norm_sq(e), 1e-14);
  Vector z = Vector::Zero(5);
  z(2) = 1.0;
  const ChaosVector e8 = exp_vector(phi, 20);
  EXPECT_NEAR(evaluate(e8, z), std::exp(0.5), 1e-8);
}

TEST(Chaos, ExpVectorZeroIsConstant) {
  const ChaosVector e = exp_vector(Vector::Zero(3), 3);
  EXPECT_EQ(e.effective_degree(), 0);
  EXPECT_DOUBLE_EQ(e.mean(), 1.0);
}

TEST(Chaos, EvaluateFirstChaos) {
  const Vector phi = random_point(6, 1);
  const Vector z = random_point(6, 2);
  EXPECT_NEAR(evaluate(ChaosVector::first_chaos(phi, 3), z), phi.dot(z), 1e-12);
  EXPECT_NEAR(evaluate(ChaosVector::constant(6, 3, 2.5), z), 2.5, 0.0);
}

TEST(Chaos, FullRoundTripAndSymmetryCheck) {
  const ChaosVector v = random_chaos(3, 3, 5);
  std::vector<std::vector<double>> full;
  for (int k = 0; k <= 3; ++k) full.push_back(v.to_full(k));
  const ChaosVector w = ChaosVector::from_full(3, full, Basis::kWhitened);
  EXPECT_NEAR(norm_sq(v - w), 0.0, 1e-28);
  full[2][1] += 1.0;
  EXPECT_THROW(ChaosVector::from_full(3, full, Basis::kWhitened), std::invalid_argument);
}

TEST(Chaos, DerivativeOfSquare) {
  ChaosVector v(3, 2);
  v.coefficient_ref(std::vector<int>{1, 1}) = 1.0;  // H_2(z_1) = z_1^2 - 1
  const VectorChaos d = derivative(v);
  EXPECT_DOUBLE_EQ(d[1].coefficient({1}), 2.0);
  EXPECT_DOUBLE_EQ(d[0].coefficient({1}), 0.0);
}

TEST(Chaos, DivergenceMatchesFiniteDimensionalOracle) {
  const int d = 4;
  const VectorChaos x = random_field(d, 2, 3);
  const ChaosVector dv = divergence(x);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Vector z = random_point(d, 10 + s);
    const auto u = [&](const Vector& p) {
      Vector out(d);
      for (int h = 0; h < d; ++h) out(h) = evaluate(x[h], p);
      return out;
    };
    EXPECT_NEAR(evaluate(dv, z), oracle::finite_dimensional_divergence(u, z), 1e-8);
  }
}

TEST(Chaos, DivergenceOfSingleCoordinate) {
  VectorChaos x(3, 3, 2);
  x[1].coefficient_ref(std::vector<int>{1}) = 1.0;  // x_h = z_1 1{h = 1}
  const ChaosVector dv = divergence(x);
  EXPECT_DOUBLE_EQ(dv.coefficient({1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(dv.mean(), 0.0);
}

TEST(Chaos, Duality) {
  const int d = 3;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const ChaosVector a = random_chaos(d, 4, 40 + s);
    const VectorChaos x = random_field(d, 3, 80 + s);
    EXPECT_NEAR(inner(derivative(a), x), inner(a, divergence(x)), 1e-10);
  }
}

TEST(Chaos, WickWithFirstChaos) {
  const ChaosVector z1 = ChaosVector::first_chaos(Vector::Unit(3, 1), 2);
  const ChaosVector w = wick_product(z1, z1, 2);
  EXPECT_DOUBLE_EQ(w.coefficient({1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(w.mean(), 0.0);
  const ChaosVector b = random_chaos(3, 3, 9);
  const ChaosVector c = wick_product(ChaosVector::constant(3, 3, 2.0), b);
  EXPECT_NEAR(norm_sq(c - 2.0 * b), 0.0, 1e-28);
}

TEST(Chaos, WickEqualsDivergenceOfDirectionalProcess) {
  const int d = 4;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const ChaosVector F = random_chaos(d, 3, 200 + s);
    const int h = static_cast<int>(s % d);
    VectorChaos x(d, d, 3);
    x[h] = F;
    const ChaosVector lhs = divergence(x, 4);
    const ChaosVector rhs = wick_product(F, ChaosVector::first_chaos(Vector::Unit(d, h), 1), 4);
    EXPECT_NEAR(norm_sq(lhs - rhs), 0.0, 1e-20);
  }
}

TEST(Chaos, ProductMatchesPointwise) {
  const int d = 3;
  const ChaosVector a = random_chaos(d, 2, 11);
  const ChaosVector b = random_chaos(d, 3, 12);
  TruncationReport rep;
  const ChaosVector p = product(a, b, 5, &rep);
  EXPECT_FALSE(rep.truncated());
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Vector z = random_point(d, 300 + s);
    EXPECT_NEAR(evaluate(p, z), evaluate(a, z) * evaluate(b, z), 1e-9);
  }
}

TEST(Chaos, TruncationIsReported) {
  const ChaosVector a = random_chaos(3, 3, 1);
  TruncationReport rep;
  wick_product(a, a, 3, &rep);
  EXPECT_TRUE(rep.truncated());
  EXPECT_EQ(rep.highest_dropped_degree, 6);
  EXPECT_GT(rep.dropped_norm_sq, 0.0);
}

TEST(Chaos, SecondQuantizationOfExpVector) {
  const int d = 4;
  Matrix C = Matrix::Random(d, d);
  C /= 1.5 * operator_norm(C);
  const Vector phi = random_point(d, 3);
  const ChaosVector lhs = second_quantization(C, exp_vector(phi, 6));
  const ChaosVector rhs = exp_vector(C.transpose() * phi, 6);
  EXPECT_LT(std::sqrt(norm_sq(lhs - rhs)), 1e-12);
}

TEST(Chaos, SecondQuantizationSpecialCases) {
  const ChaosVector v = random_chaos(3, 3, 21);
  EXPECT_NEAR(norm_sq(second_quantization(Matrix::Identity(3, 3), v) - v), 0.0, 1e-28);
  const ChaosVector e = second_quantization(Matrix::Zero(3, 3), v);
  EXPECT_EQ(e.effective_degree(), 0);
  EXPECT_DOUBLE_EQ(e.mean(), v.mean());
  EXPECT_THROW(second_quantization(2.0 * Matrix::Identity(3, 3), v), std::invalid_argument);
}

TEST(Chaos, SecondQuantizationSemigroup) {
  const int d = 3;
  Matrix B = Matrix::Random(d, d), C = Matrix::Random(d, d);
  B /= 1.1 * operator_norm(B);
  C /= 1.1 * operator_norm(C);
  const ChaosVector v = random_chaos(d, 4, 5);
  const ChaosVector lhs = second_quantization(C, second_quantization(B, v));
  const ChaosVector rhs = second_quantization(B * C, v);
  EXPECT_LT(norm_sq(lhs - rhs), 1e-20);
  EXPECT_LE(norm_sq(second_quantization(C, v)), norm_sq(v) + 1e-12);
}

TEST(Chaos, ExpandRecoversSquare) {
  const Expansion e = expand([](std::span<const double> z) { return z[0] * z[0]; }, 2, 2, 20000, 3);
  EXPECT_NEAR(e.coefficients.mean(), 1.0, 3 * e.standard_errors.mean() + 1e-12);
  EXPECT_NEAR(e.coefficients.coefficient({0, 0}), 1.0, 3 * e.standard_errors.coefficient({0, 0}));
  EXPECT_NEAR(e.coefficients.coefficient({1}), 0.0, 3 * e.standard_errors.coefficient({1}) + 1e-12);
  const Expansion c = expand([](std::span<const double>) { return 2.0; }, 2, 2, 1000, 3);
  EXPECT_TRUE(c.degenerate_variance);
}

TEST(Chaos, JsonRoundTrip) {
  ChaosVector v = random_chaos(3, 2, 8);
  v.set_basis(Basis::kObservation);
  const ChaosVector w = chaos_from_json(to_json(v));
  EXPECT_EQ(w.basis(), Basis::kObservation);
  EXPECT_EQ(norm_sq(v - w), 0.0);
  EXPECT_THROW(chaos_from_json("{\"format\":\"other\"}"), std::invalid_argument);
}

}  // namespace
}  // namespace wiener
