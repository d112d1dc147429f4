#pragma once

// Brute-force reference computations used only by tests and verification checks. Each one
// goes through code paths that do not share logic with the library routine it verifies.

#include "wiener/gaussian_space.hpp"
#include "wiener/girsanov.hpp"
#include "wiener/smoothing.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace wiener::oracle {

/// Regression matrix B with E(w1(t_k) | w2) = B.row(k) . (w2(t_1), ..., w2(t_n)), from the
/// covariances of path values (cumulative sums of dt V).
Matrix w1_given_w2_regression(const TimeGrid& grid, const Matrix& V);

/// delta(u)(z) = sum u_i(z) z_i - sum d u_i / d z_i, with the derivative by a fourth-order
/// central difference of step eps.
double finite_dimensional_divergence(const std::function<Vector(const Vector&)>& u, const Vector& z,
                                     double eps = 1e-3);

/// log of the N(0, S) density.
double log_gaussian_density(const Matrix& S, const Vector& x);

/// Density of N(h, S) over N(0, S) at x.
double gaussian_shift_ratio(const Matrix& S, const Vector& h, const Vector& x);

/// Density at y (xi coordinates) of the Euler-discretized law of the state/observation
/// increments relative to N(0, S), by numerically inverting the Euler map (Newton with a
/// finite-difference Jacobian) and using the change-of-variables formula.
std::optional<double> exact_density(const DriftSpec& drift, const Vector& y, const Matrix& S, int n, double dt);

/// Heat solution E exp(-(r + W_t)^2 / (2 s^2)).
double heat_gaussian(double s, double r, double t);

struct McSurface {
  Matrix mean;  // (times) x (r points)
  Matrix standard_error;
};

/// Feynman-Kac estimate of E f(X_t^r) for dX = a(X) dt + dW on the grid times, with
/// `substeps` Euler steps per grid cell and common random numbers across r.
McSurface feynman_kac(const std::function<double(double)>& a, const std::function<double(double)>& f,
                      const RGrid& r_grid, const TimeGrid& grid, int substeps, std::size_t paths,
                      std::uint64_t seed);

struct TubeEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::vector<double> bandwidths;
  std::vector<double> per_bandwidth;
  std::vector<double> effective_counts;
};

/// E(f(x1(t)) | x2 near observed) from unconditional model simulations, by Gaussian-kernel
/// regression on the observation increments at several bandwidths and a quadratic
/// extrapolation in h^2 to h = 0.
TubeEstimate tube_conditioning(const SmoothingModel& model, const Vector& observed_x2, int t_index,
                               std::size_t paths, std::uint64_t seed, const std::vector<double>& bandwidths);

}  // namespace wiener::oracle
