#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>

namespace wiener {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Uniform grid on [0, T] with n cells. Cell i is [t_i, t_{i+1}).
class TimeGrid {
 public:
  TimeGrid(double horizon, int steps);

  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  double dt() const { return dt_; }
  /// t_i = i * dt for i < n, and t_n = T.
  double time(int i) const;

 private:
  double horizon_;
  int steps_;
  double dt_;
};

/// Cross-covariance between the two noise components:
///   E (phi1, dw1)(phi2, dw2) = (phi1, V phi2).
/// The volterra kind carries a kernel table k(t_i, t_j) that must be lower-triangular;
/// the operator matrix is V_ij = k(t_i, t_j) * dt.
struct CrossCovarianceSpec {
  enum class Kind { kZero, kScalar, kVolterra };

  Kind kind = Kind::kZero;
  double rho = 0.0;
  Matrix kernel;

  static CrossCovarianceSpec zero();
  static CrossCovarianceSpec scalar(double rho);
  static CrossCovarianceSpec volterra(Matrix kernel);
  /// Strictly lower-triangular kernel k(t, s) = rho * lambda * exp(-lambda (t - s)), s < t.
  static CrossCovarianceSpec exponential_volterra(const TimeGrid& grid, double rho, double lambda);

  std::string describe() const;
};

/// Covariance of the whitened/unwhitened Gaussian coordinates on the 2n-dimensional
/// discretization of L2([0,T], R^2). Coordinates 0..n-1 are the first component's
/// cells, n..2n-1 the second component's.
struct CovModel {
  TimeGrid grid;
  CrossCovarianceSpec spec;
  Matrix V;           // n x n
  Matrix S;           // [[I, V], [V^T, I]]
  Matrix S_half;      // symmetric square root
  Matrix S_inv_half;  // symmetric inverse square root
  Matrix S_inv;
  Matrix Q;           // S_inv - I

  int n() const { return grid.steps(); }
  int dim() const { return 2 * grid.steps(); }
};

/// Largest singular value.
double operator_norm(const Matrix& m);

CovModel build_covariance(const TimeGrid& grid, const CrossCovarianceSpec& spec);

/// max over grid prefixes t_k of || P_k S - P_k S P_k ||, with P_k the projector onto the
/// first k cells of both components.
double prefix_projection_defect(const CovModel& cov);

/// One draw of the noise: whitened coordinates, correlated coordinates and the paths.
struct NoiseSample {
  Vector xi_prime;  // 2n, identity covariance
  Vector xi;        // 2n, covariance S; increments / sqrt(dt)
  Vector w1;        // n + 1, w1(0) = 0
  Vector w2;        // n + 1
};

/// Rebuilds the sample from whitened coordinates.
NoiseSample sample_from_whitened(const CovModel& cov, const Vector& xi_prime);
/// Rebuilds the sample from correlated coordinates xi (increments / sqrt(dt)).
NoiseSample sample_from_correlated(const CovModel& cov, const Vector& xi);
/// Path of cumulative sums: out(0) = 0, out(k+1) = out(k) + sqrt(dt) * coords(k).
Vector path_from_coordinates(std::span<const double> coords, double dt);

/// Draw `index` of the stream `seed`.
NoiseSample sample_pair(const CovModel& cov, std::uint64_t seed, std::uint64_t index = 0);

/// Orthogonal projector (in whitened coordinates) onto the span generating sigma(w2).
Matrix conditional_projector(const CovModel& cov);

/// Rows of the second component: xi2 = R xi', R R^T = I. The rows of R form an
/// orthonormal basis of the range of the conditional projector.
Matrix w2_coordinate_map(const CovModel& cov);

/// A mean-zero Gaussian process on the grid given by first-chaos rows in whitened
/// coordinates: gamma(t_k) = (rows.row(k), xi').
struct IntegratorProcess {
  TimeGrid grid{1.0, 2};
  Matrix rows;                  // (n + 1) x 2n, rows.row(0) == 0
  double bound_constant = 0.0;  // exact grid constant of the integrator inequality

  Vector increment(int k) const { return (rows.row(k + 1) - rows.row(k)).transpose(); }
  double variance(int k) const { return rows.row(k).squaredNorm(); }
  /// Pathwise value at grid point k for a given whitened draw.
  double value(int k, const Vector& xi_prime) const { return rows.row(k).dot(xi_prime); }
};

/// Exact grid constant: max over step functions of E(sum a_k dgamma_k)^2 / sum a_k^2 dt,
/// the largest eigenvalue of the increment Gram matrix divided by dt.
double exact_integrator_constant(const Matrix& rows, double dt);

/// Rows of w1(t_k) in whitened coordinates.
Matrix w1_rows(const CovModel& cov);
/// Rows of w2(t_k) in whitened coordinates.
Matrix w2_rows(const CovModel& cov);

/// gamma(t) = E(w1(t) | w2) as an integrator process.
IntegratorProcess regress_gamma(const CovModel& cov);

}  // namespace wiener
