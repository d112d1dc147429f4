#pragma once

#include "wiener/gaussian_space.hpp"

#include <functional>
#include <string>
#include <vector>

namespace wiener {

/// A scalar C^1 function with a known bound on its derivative.
struct ScalarFunction {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  double derivative_bound = 0.0;  // sup |f'|

  double operator()(double x) const { return value(x); }
  static ScalarFunction zero();
  static ScalarFunction constant(double c);
  static ScalarFunction linear(double eps);
  static ScalarFunction scaled_tanh(double eps);
  static ScalarFunction scaled_sin(double eps);
};

/// Drifts of the state equation dx1 = a1(x1) dt + dw1, dx2 = a2(x1) dt + dw2.
struct DriftSpec {
  std::string name;
  ScalarFunction a1;
  ScalarFunction a2;

  bool is_zero() const { return name == "zero"; }
  double derivative_bound() const { return a1.derivative_bound + a2.derivative_bound; }

  static DriftSpec zero();
  static DriftSpec constant(double c1, double c2);
  static DriftSpec linear(double e1, double e2);
  /// a1 = e1 tanh, a2 = e2 sin.
  static DriftSpec tanh_sin(double e1, double e2);
  /// a1 = e1 tanh, a2 = e2 x.
  static DriftSpec tanh_linear(double e1, double e2);
  /// Named preset with a single strength parameter: zero, constant, linear, tanh_sin,
  /// tanh_linear, tanh (a2 = 0).
  static DriftSpec preset(const std::string& name, double eps);
};

/// ||S^{-1/2}|| (sup|a1'| + sup|a2'|) sqrt(T).
double smallness_value(const DriftSpec& drift, const CovModel& cov);
/// Throws std::invalid_argument unless smallness_value < 1.
void check_smallness(const DriftSpec& drift, const CovModel& cov);

struct DensityEval {
  double value = 1.0;
  double log_value = 0.0;
  double zeta = 1.0;
  double divergence_term = 0.0;
  double quadratic_term = 0.0;
  bool singular = false;
};

/// exp{(S^{-1}h, xi) - (S^{-1}h, h) / 2}.
double shift_density(const Vector& h, const NoiseSample& sample, const CovModel& cov);
/// Same quantity written with the w1/w2 path increments: g = S^{-1}h, exponent
/// sum_i g1_i dw1_i / sqrt(dt) + g2_i dw2_i / sqrt(dt) - (g, h) / 2.
double shift_density_paths(const Vector& h, const Vector& w1, const Vector& w2, const CovModel& cov);

struct DriftJacobian {
  Vector h;   // 2n
  Matrix Dh;  // 2n x 2n, derivative in xi coordinates
};

/// h_i = sqrt(dt) a1(w1(t_i)), h_{n+i} = sqrt(dt) a2(w1(t_i)) and its xi-Jacobian.
DriftJacobian drift_jacobian(const DriftSpec& drift, const NoiseSample& sample, const CovModel& cov);
Vector drift_vector(const DriftSpec& drift, const Vector& xi, int n, double dt);

struct Det2 {
  double value = 1.0;
  bool singular = false;  // det(I + M) <= 0
};

/// det(I + M) exp(-tr M).
Det2 det2(const Matrix& M);
/// Second implementation through the eigenvalues of M.
Det2 det2_eigen(const Matrix& M);
/// det2(S Dh) using the block structure of Dh (second block column zero).
Det2 det2_drift(const CovModel& cov, const Matrix& Dh);

struct QuasiNilpotence {
  std::vector<double> curve;  // ||M^k||^{1/k}, k = 1..k_max
  std::vector<double> bound;  // ||S|| sqrt(c) / (k!)^{1/(2k)}, when requested
};

QuasiNilpotence quasinilpotence_certificate(const Matrix& M, int k_max);
/// Curve for M = S Dh together with the factorial bound, c = T (sup|a1'| + sup|a2'|)^2.
QuasiNilpotence quasinilpotence_certificate(const CovModel& cov, const DriftSpec& drift, const Matrix& Dh,
                                            int k_max);

DensityEval density_p(const DriftSpec& drift, const NoiseSample& sample, const CovModel& cov);
/// Same, evaluated directly on xi coordinates.
DensityEval density_p(const DriftSpec& drift, const Vector& xi, const CovModel& cov);

/// Forward Euler map: increments of (x1, x2) / sqrt(dt) as a function of the noise xi.
Vector euler_map(const DriftSpec& drift, const Vector& xi, const CovModel& cov);

}  // namespace wiener
