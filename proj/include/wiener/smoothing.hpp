#pragma once

#include "wiener/chaos.hpp"
#include "wiener/gaussian_space.hpp"
#include "wiener/girsanov.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace wiener {

/// Test function f with two derivatives.
struct TestFunction {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;

  double operator()(double r) const { return value(r); }
  /// exp(-r^2 / (2 s^2)).
  static TestFunction gaussian(double s);
  static TestFunction identity();
  static TestFunction constant(double c);
  /// Named preset: gaussian (width s), identity, one.
  static TestFunction preset(const std::string& name, double s);
};

struct RGrid {
  double r_min = -4.0;
  double r_max = 4.0;
  int points = 33;

  double dr() const { return (r_max - r_min) / (points - 1); }
  double r(int i) const { return i == points - 1 ? r_max : r_min + i * dr(); }
  /// Index of the grid point nearest to r, clamped to the ends.
  int nearest(double r) const;
};

struct SmoothingModel {
  CovModel cov;
  DriftSpec drift;
  TestFunction f;
  RGrid r_grid;
};

/// Checks the drift smallness condition and that f, f', f'' are finite on the r-grid
/// extended by three standard deviations of w1(T).
void validate(const SmoothingModel& model);

struct ModelPath {
  NoiseSample noise;
  Vector x1, x2;  // n + 1 grid values, starting at 0
};

/// Euler scheme for the state/observation pair driven by sample_pair(cov, seed, index).
ModelPath simulate_path(const SmoothingModel& model, std::uint64_t seed, std::uint64_t index);

struct PathBundle {
  Matrix x1, x2, w1, w2;  // m x (n + 1)
};

PathBundle simulate_model(const SmoothingModel& model, std::uint64_t seed, std::size_t m);

// ---- Bayes smoother -------------------------------------------------------------------

struct SmootherOutput {
  double psi = 0.0;
  double standard_error = 0.0;
  double ess = 0.0;
  bool unreliable = false;
  bool singular = false;
  Matrix pi;  // (n + 1) x r points, each row a probability vector
};

/// Self-normalized importance estimate of E(f(x1(t)) | x2 = observed), t = grid time t_index.
/// w1 is drawn from its Gaussian conditional law given w2 = observed, weights are p(w1, observed).
SmootherOutput bayes_smoother(const SmoothingModel& model, const Vector& observed_x2, int t_index,
                              std::uint64_t seed, std::size_t m);

/// xi2 coordinates of an observed path (increments / sqrt(dt)).
Vector observation_coordinates(const Vector& path, double dt);

// ---- anticipating SPDE ----------------------------------------------------------------

enum class ThirdTerm {
  kShortcut,   // a1(r) dU/dr, exact form for a2 = 0
  kProjected,  // E(f'(r + w1(t)) (S D p)_1(t) | w2) by Monte-Carlo chaos projection
  kNone
};

enum class IncrementMode {
  kWick,               // dU/dr <> d gamma
  kProductMinusTrace,  // dU/dr * d gamma - (D dU/dr, g)
};

struct SpdeOptions {
  int max_degree = 4;
  int substeps = 1;  // explicit sub-steps per grid cell (d gamma split evenly)
  ThirdTerm third = ThirdTerm::kShortcut;
  IncrementMode increment = IncrementMode::kWick;
  std::size_t projection_samples = 20000;
  std::uint64_t seed = 1;
};

/// U(r, t) for all grid times (outer index) and r-grid points (inner index), as chaos
/// vectors over the n observation coordinates xi2.
struct SpdeField {
  TimeGrid grid{1.0, 2};
  RGrid r_grid;
  std::vector<std::vector<ChaosVector>> U;
  IntegratorProcess gamma;  // E(w1 | w2) in whitened coordinates
  TruncationReport truncation;

  /// Mean surface E U(r, t): (n + 1) x r points.
  Matrix mean() const;
  /// U(r_i, t_k) evaluated at the observation coordinates xi2.
  double evaluate_at(int t_index, int r_index, const Vector& xi2) const;
};

/// d gamma over cell i as a first-chaos vector in xi2 coordinates: sqrt(dt) V(i, .).
Vector gamma_increment(const CovModel& cov, int i);

/// Throws std::invalid_argument when dt / substeps > dr^2 / 2.
SpdeField solve_spde(const SmoothingModel& model, const SpdeOptions& options);

// ---- backward Kolmogorov check ------------------------------------------------------------

struct KolmogorovProblem {
  std::string name;
  std::function<double(double)> a;
  std::function<double(double)> b;
  TestFunction f;
  double horizon = 1.0;
  RGrid r_grid{-1.0, 1.0, 9};
  int s_points = 5;  // s_j = j ds, ds = horizon / (2 (s_points - 1)), all < horizon

  static KolmogorovProblem brownian();
  static KolmogorovProblem ornstein_uhlenbeck();
  static KolmogorovProblem transport();
  static KolmogorovProblem preset(const std::string& name);
};

struct KolmogorovOptions {
  std::size_t paths = 20000;
  int steps = 64;  // Euler steps over [0, horizon]
  std::uint64_t seed = 1;
};

struct KolmogorovPoint {
  double r = 0.0, s = 0.0;
  double residual = 0.0;
  double standard_error = 0.0;
  double truncation = 0.0;
  double euler_bias = 0.0;
  double tolerance = 0.0;
};

struct KolmogorovReport {
  std::string name;
  Matrix phi;  // r points x s points
  std::vector<KolmogorovPoint> points;
  double worst_ratio = 0.0;  // max |residual| / tolerance
  bool passed() const { return worst_ratio <= 1.0; }
};

/// Phi(r, s) = E f(x(r, s, T)) by Monte Carlo, with the residual of
/// -d_s Phi = b^2 / 2 d_rr Phi + a d_r Phi checked at interior points.
KolmogorovReport kolmogorov_check(const KolmogorovProblem& problem, const KolmogorovOptions& options);

// ---- cross-validation ----------------------------------------------------------------

struct ComparisonItem {
  std::string name;
  double measured = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  bool passed() const { return std::abs(measured - reference) <= tolerance; }
};

struct ConsistencyOptions {
  SpdeOptions spde;
  std::size_t mc_samples = 100000;
  std::size_t smoother_samples = 20000;
  int paths = 20;
  double r_query = 0.0;
};

struct ConsistencyReport {
  std::vector<ComparisonItem> items;
  bool passed() const;
};

/// Compares the SPDE field U(r_query, t) against Monte-Carlo and Bayes-smoother estimates.
ConsistencyReport consistency_check(const SmoothingModel& model, int t_index, const ConsistencyOptions& options);

}  // namespace wiener
