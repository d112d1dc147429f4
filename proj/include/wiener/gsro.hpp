#pragma once

#include "wiener/chaos.hpp"
#include "wiener/gaussian_space.hpp"

#include <iosfwd>
#include <vector>

namespace wiener {

/// Gaussian strong random operator A phi = alpha0 phi + (alpha1 phi, xi'), restricted to a
/// finite set of outputs. Output o is
///   (A phi)_o = sum_j alpha0(o, j) phi_j + sum_{j,l} alpha1[o](j, l) phi_j xi'_l.
struct Gsro {
  Matrix alpha0;               // outputs x inputs
  std::vector<Matrix> alpha1;  // one inputs x noise matrix per output

  int outputs() const { return static_cast<int>(alpha1.size()); }
  int inputs() const { return static_cast<int>(alpha0.cols()); }
  int noise_dim() const { return alpha1.empty() ? 0 : static_cast<int>(alpha1.front().cols()); }
};

/// (A phi)(t_o) = int (K phi)(t_o, s) dw(s): kernel[o](l, j) is the s-cell l coefficient of
/// (K phi)(t_o, .) per unit phi_j, and noise_map (n x noise) expresses the w-coordinates in
/// terms of xi'.
Gsro gsro_from_kernel(const std::vector<Matrix>& kernel, const Matrix& noise_map);

/// Integral of an n-dimensional step integrand against gamma up to t_{o+1}:
/// alpha1[o](j, .) = (c_{j+1} - c_j) / sqrt(dt) for j <= o.
Gsro integrator_gsro(const IntegratorProcess& gamma);
/// Ito integral against w1 (the integrator with rows w1_rows(cov)).
Gsro ito_gsro(const CovModel& cov);
/// Skorokhod integral over the whole whitened space, accumulated over grid cells: input
/// coordinates j and n + j belong to cell j. The last output equals divergence(x).
Gsro whitened_ito_gsro(const TimeGrid& grid);

/// Gamma(C) A: alpha1[o] -> alpha1[o] C.
Gsro transport(const Gsro& A, const Matrix& C);

/// A x = alpha0 x + delta(alpha1^T x), componentwise in the outputs.
VectorChaos gsro_apply(const Gsro& A, const VectorChaos& x, TruncationReport* report = nullptr);
/// Deterministic input: coefficients of the affine Gaussian output.
VectorChaos gsro_apply(const Gsro& A, const Vector& phi, int max_degree);

/// Chaos norm of Gamma(C)(A x) - (Gamma(C) A)(Gamma(C) x).
double commutation_check(const Matrix& C, const Gsro& A, const VectorChaos& x);

// ---- integrators ----------------------------------------------------------------------

struct IntegratorBound {
  double exact = 0.0;      // sup over all step functions
  double trial_max = 0.0;  // max over the random trials (<= exact)
};

/// sup over step functions a of E(sum a_k d gamma_k)^2 / sum a_k^2 dt.
IntegratorBound integrator_bound(const IntegratorProcess& gamma, int trials, std::uint64_t seed);

/// gamma = Gamma(C) w1: rows w1_rows(cov) C.
IntegratorProcess transported_integrator(const CovModel& cov, const Matrix& C);

struct FbmKernel {
  double hurst = 0.75;
  TimeGrid grid{1.0, 2};
  Matrix kernel;  // (n+1) x n cell averages of K(t_i, .) over cell j; row 0 is zero
  double c_alpha = 0.0;

  /// Exact covariance R(s, t) = (t^{2a} + s^{2a} - |t - s|^{2a}) / 2.
  double covariance(double s, double t) const;
};

/// Pointwise kernel K(t, s) for c_alpha = 1.
double fbm_kernel_value(double hurst, double t, double s);
FbmKernel fbm_kernel(double hurst, const TimeGrid& grid);
/// B(t_i) = sum_j kernel(i, j) dw1_j, expressed in whitened coordinates of cov.
IntegratorProcess fbm_integrator(const FbmKernel& k, const CovModel& cov);

/// Writes the kernel matrix as CSV (17 significant digits, header row).
void write_kernel_csv(std::ostream& os, const FbmKernel& k);

}  // namespace wiener
