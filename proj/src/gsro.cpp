#include "wiener/gsro.hpp"

#include "wiener/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace wiener {

Gsro gsro_from_kernel(const std::vector<Matrix>& kernel, const Matrix& noise_map) {
  if (kernel.empty()) throw std::invalid_argument("gsro_from_kernel: empty kernel");
  const Eigen::Index in = kernel.front().cols();
  Gsro A;
  A.alpha0 = Matrix::Zero(static_cast<Eigen::Index>(kernel.size()), in);
  for (const auto& k : kernel) {
    if (k.cols() != in || k.rows() != noise_map.rows())
      throw std::invalid_argument("gsro_from_kernel: inconsistent kernel shapes");
    if (!k.allFinite()) throw std::invalid_argument("gsro_from_kernel: kernel not finite");
    A.alpha1.push_back(k.transpose() * noise_map);
  }
  return A;
}

Gsro integrator_gsro(const IntegratorProcess& gamma) {
  const int n = gamma.grid.steps();
  const double inv = 1.0 / std::sqrt(gamma.grid.dt());
  Gsro A;
  A.alpha0 = Matrix::Zero(n, n);
  Matrix inc(n, gamma.rows.cols());
  for (int j = 0; j < n; ++j) inc.row(j) = inv * (gamma.rows.row(j + 1) - gamma.rows.row(j));
  for (int o = 0; o < n; ++o) {
    Matrix a = Matrix::Zero(n, gamma.rows.cols());
    a.topRows(o + 1) = inc.topRows(o + 1);
    A.alpha1.push_back(std::move(a));
  }
  return A;
}

Gsro ito_gsro(const CovModel& cov) {
  return integrator_gsro(IntegratorProcess{cov.grid, w1_rows(cov), 1.0});
}

Gsro whitened_ito_gsro(const TimeGrid& grid) {
  const int n = grid.steps();
  Gsro A;
  A.alpha0 = Matrix::Zero(n, 2 * n);
  for (int o = 0; o < n; ++o) {
    Matrix a = Matrix::Zero(2 * n, 2 * n);
    for (int j = 0; j <= o; ++j) {
      a(j, j) = 1.0;
      a(n + j, n + j) = 1.0;
    }
    A.alpha1.push_back(std::move(a));
  }
  return A;
}

Gsro transport(const Gsro& A, const Matrix& C) {
  Gsro out;
  out.alpha0 = A.alpha0;
  for (const auto& a : A.alpha1) out.alpha1.push_back(a * C);
  return out;
}

VectorChaos gsro_apply(const Gsro& A, const VectorChaos& x, TruncationReport* report) {
  if (x.size() != A.inputs()) throw std::invalid_argument("gsro_apply: input dimension mismatch");
  if (x.size() == 0) throw std::invalid_argument("gsro_apply: empty input");
  const int d = x[0].dim();
  if (d != A.noise_dim()) throw std::invalid_argument("gsro_apply: noise dimension mismatch");
  int K = 0;
  for (const auto& c : x.components) K = std::max(K, c.max_degree());
  VectorChaos out;
  for (int o = 0; o < A.outputs(); ++o) {
    ChaosVector value(d, K + 1, x[0].basis());
    for (int j = 0; j < x.size(); ++j)
      if (A.alpha0(o, j) != 0.0) value.add_scaled(x[j], A.alpha0(o, j));
    VectorChaos y;
    y.components.assign(static_cast<std::size_t>(d), ChaosVector(d, K, x[0].basis()));
    const Matrix& a = A.alpha1[static_cast<std::size_t>(o)];
    for (int j = 0; j < x.size(); ++j)
      for (int l = 0; l < d; ++l)
        if (a(j, l) != 0.0) y[l].add_scaled(x[j], a(j, l));
    value += divergence(y, K + 1, report);
    out.components.push_back(std::move(value));
  }
  return out;
}

VectorChaos gsro_apply(const Gsro& A, const Vector& phi, int max_degree) {
  if (phi.size() != A.inputs()) throw std::invalid_argument("gsro_apply: input dimension mismatch");
  const int K = std::max(1, max_degree);
  VectorChaos out;
  const Vector mean = A.alpha0 * phi;
  for (int o = 0; o < A.outputs(); ++o) {
    const Vector c = A.alpha1[static_cast<std::size_t>(o)].transpose() * phi;
    ChaosVector v = ChaosVector::first_chaos(c, K);
    v.degree(0)[0] = mean(o);
    out.components.push_back(std::move(v));
  }
  return out;
}

double commutation_check(const Matrix& C, const Gsro& A, const VectorChaos& x) {
  const VectorChaos lhs = second_quantization(C, gsro_apply(A, x));
  const VectorChaos rhs = gsro_apply(transport(A, C), second_quantization(C, x));
  double s = 0.0;
  for (int o = 0; o < lhs.size(); ++o) s += norm_sq(lhs[o] - rhs[o]);
  return std::sqrt(s);
}

IntegratorBound integrator_bound(const IntegratorProcess& gamma, int trials, std::uint64_t seed) {
  const int n = gamma.grid.steps();
  const double dt = gamma.grid.dt();
  Matrix inc(n, gamma.rows.cols());
  for (int k = 0; k < n; ++k) inc.row(k) = gamma.rows.row(k + 1) - gamma.rows.row(k);
  IntegratorBound b;
  b.exact = exact_integrator_constant(gamma.rows, dt);
  Vector a(n);
  for (int t = 0; t < trials; ++t) {
    CounterRng rng(seed, static_cast<std::uint64_t>(t));
    rng.fill_normal(std::span<double>(a.data(), static_cast<std::size_t>(n)));
    const double num = (inc.transpose() * a).squaredNorm();
    b.trial_max = std::max(b.trial_max, num / (a.squaredNorm() * dt));
  }
  return b;
}

IntegratorProcess transported_integrator(const CovModel& cov, const Matrix& C) {
  IntegratorProcess g{cov.grid, w1_rows(cov) * C, 0.0};
  g.bound_constant = exact_integrator_constant(g.rows, cov.grid.dt());
  return g;
}

}  // namespace wiener
