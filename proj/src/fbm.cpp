#include "wiener/gsro.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace wiener {

namespace {

struct Rule {
  std::vector<double> x, w;  // nodes and weights on [0, 1]
};

Rule gauss_legendre(int m) {
  Rule r;
  r.x.resize(static_cast<std::size_t>(m));
  r.w.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    r.x[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
    r.w[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return r;
}

const Rule& inner_rule() {
  static const Rule r = gauss_legendre(48);
  return r;
}

const Rule& cell_rule() {
  static const Rule r = gauss_legendre(24);
  return r;
}

constexpr double kEndpointPower = 5.0;

// Integral of g over [a, b]; `left`/`right` mark endpoints where g is not smooth.
template <class G>
double integrate_cell(const G& g, double a, double b, bool left, bool right) {
  const Rule& r = cell_rule();
  if (left && right) {
    const double m = 0.5 * (a + b);
    return integrate_cell(g, a, m, true, false) + integrate_cell(g, m, b, false, true);
  }
  double sum = 0.0;
  const double q = kEndpointPower;
  for (std::size_t k = 0; k < r.x.size(); ++k) {
    const double u = r.x[k];
    if (left) {
      sum += r.w[k] * g(a + (b - a) * std::pow(u, q)) * q * std::pow(u, q - 1.0);
    } else if (right) {
      sum += r.w[k] * g(b - (b - a) * std::pow(u, q)) * q * std::pow(u, q - 1.0);
    } else {
      sum += r.w[k] * g(a + (b - a) * u);
    }
  }
  return sum * (b - a);
}

}  // namespace

double fbm_kernel_value(double hurst, double t, double s) {
  if (!(s > 0.0) || !(t > s)) return 0.0;
  const double e = hurst - 0.5;
  const Rule& r = inner_rule();
  double inner = 0.0;
  for (std::size_t k = 0; k < r.x.size(); ++k)
    inner += r.w[k] * std::pow(s + (t - s) * std::pow(r.x[k], 1.0 / e), e);
  return std::pow(s, -e) * std::pow(t - s, e) * inner;
}

double FbmKernel::covariance(double s, double t) const {
  const double a = 2.0 * hurst;
  return 0.5 * (std::pow(t, a) + std::pow(s, a) - std::pow(std::abs(t - s), a));
}

FbmKernel fbm_kernel(double hurst, const TimeGrid& grid) {
  if (!(hurst > 0.5 && hurst < 1.0)) throw std::invalid_argument("fbm_kernel: hurst must lie in (1/2, 1)");
  const int n = grid.steps();
  const double dt = grid.dt();
  FbmKernel k;
  k.hurst = hurst;
  k.grid = grid;
  k.kernel = Matrix::Zero(n + 1, n);
  for (int i = 1; i <= n; ++i) {
    const double t = grid.time(i);
    for (int j = 0; j < i; ++j) {
      const auto g = [&](double s) { return fbm_kernel_value(hurst, t, s); };
      k.kernel(i, j) = integrate_cell(g, grid.time(j), grid.time(j + 1), j == 0, j == i - 1) / dt;
    }
  }
  const double var = dt * k.kernel.row(n).squaredNorm();
  k.c_alpha = 1.0 / std::sqrt(var);
  k.kernel *= k.c_alpha;
  return k;
}

IntegratorProcess fbm_integrator(const FbmKernel& k, const CovModel& cov) {
  const int n = cov.n();
  if (k.grid.steps() != n) throw std::invalid_argument("fbm_integrator: grid mismatch");
  IntegratorProcess g{cov.grid, std::sqrt(cov.grid.dt()) * k.kernel * cov.S_half.topRows(n), 0.0};
  g.bound_constant = exact_integrator_constant(g.rows, cov.grid.dt());
  return g;
}

void write_kernel_csv(std::ostream& os, const FbmKernel& k) {
  const int n = k.grid.steps();
  os << "t";
  for (int j = 0; j < n; ++j) os << ",s" << j;
  os << '\n' << std::setprecision(17);
  for (int i = 0; i <= n; ++i) {
    os << k.grid.time(i);
    for (int j = 0; j < n; ++j) os << ',' << k.kernel(i, j);
    os << '\n';
  }
}

}  // namespace wiener
