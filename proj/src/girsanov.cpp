#include "wiener/girsanov.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

namespace wiener {

ScalarFunction ScalarFunction::zero() {
  return {[](double) { return 0.0; }, [](double) { return 0.0; }, 0.0};
}

ScalarFunction ScalarFunction::constant(double c) {
  return {[c](double) { return c; }, [](double) { return 0.0; }, 0.0};
}

ScalarFunction ScalarFunction::linear(double eps) {
  return {[eps](double x) { return eps * x; }, [eps](double) { return eps; }, std::abs(eps)};
}

ScalarFunction ScalarFunction::scaled_tanh(double eps) {
  return {[eps](double x) { return eps * std::tanh(x); },
          [eps](double x) {
            const double c = std::cosh(x);
            return eps / (c * c);
          },
          std::abs(eps)};
}

ScalarFunction ScalarFunction::scaled_sin(double eps) {
  return {[eps](double x) { return eps * std::sin(x); }, [eps](double x) { return eps * std::cos(x); },
          std::abs(eps)};
}

DriftSpec DriftSpec::zero() { return {"zero", ScalarFunction::zero(), ScalarFunction::zero()}; }

DriftSpec DriftSpec::constant(double c1, double c2) {
  return {"constant", ScalarFunction::constant(c1), ScalarFunction::constant(c2)};
}

DriftSpec DriftSpec::linear(double e1, double e2) {
  return {"linear", ScalarFunction::linear(e1), ScalarFunction::linear(e2)};
}

DriftSpec DriftSpec::tanh_sin(double e1, double e2) {
  return {"tanh_sin", ScalarFunction::scaled_tanh(e1), ScalarFunction::scaled_sin(e2)};
}

DriftSpec DriftSpec::tanh_linear(double e1, double e2) {
  return {"tanh_linear", ScalarFunction::scaled_tanh(e1), ScalarFunction::linear(e2)};
}

DriftSpec DriftSpec::preset(const std::string& name, double eps) {
  if (name == "zero") return zero();
  if (name == "constant") return constant(eps, eps);
  if (name == "linear") return linear(eps, eps);
  if (name == "tanh_sin") return tanh_sin(eps, eps);
  if (name == "tanh_linear") return tanh_linear(eps, eps);
  if (name == "tanh") return {"tanh", ScalarFunction::scaled_tanh(eps), ScalarFunction::zero()};
  throw std::invalid_argument("unknown drift preset '" + name + "'");
}

double smallness_value(const DriftSpec& drift, const CovModel& cov) {
  return operator_norm(cov.S_inv_half) * drift.derivative_bound() * std::sqrt(cov.grid.horizon());
}

void check_smallness(const DriftSpec& drift, const CovModel& cov) {
  const double v = smallness_value(drift, cov);
  if (!(v < 1.0)) {
    std::ostringstream os;
    os << "drift '" << drift.name << "' violates the smallness condition: " << v << " >= 1";
    throw std::invalid_argument(os.str());
  }
}

double shift_density(const Vector& h, const NoiseSample& sample, const CovModel& cov) {
  const Vector g = cov.S_inv * h;
  return std::exp(g.dot(sample.xi) - 0.5 * g.dot(h));
}

double shift_density_paths(const Vector& h, const Vector& w1, const Vector& w2, const CovModel& cov) {
  const int n = cov.n();
  const Vector g = cov.S_inv * h;
  const double inv = 1.0 / std::sqrt(cov.grid.dt());
  double stoch = 0.0;
  for (int i = 0; i < n; ++i) stoch += g(i) * (w1(i + 1) - w1(i)) * inv + g(n + i) * (w2(i + 1) - w2(i)) * inv;
  return std::exp(stoch - 0.5 * g.dot(h));
}

Vector drift_vector(const DriftSpec& drift, const Vector& xi, int n, double dt) {
  const double s = std::sqrt(dt);
  Vector h(2 * n);
  double w = 0.0;
  for (int i = 0; i < n; ++i) {
    h(i) = s * drift.a1(w);
    h(n + i) = s * drift.a2(w);
    w += s * xi(i);
  }
  return h;
}

DriftJacobian drift_jacobian(const DriftSpec& drift, const NoiseSample& sample, const CovModel& cov) {
  const int n = cov.n();
  const double dt = cov.grid.dt();
  DriftJacobian out{drift_vector(drift, sample.xi, n, dt), Matrix::Zero(2 * n, 2 * n)};
  for (int i = 1; i < n; ++i) {
    const double w = sample.w1(i);
    const double d1 = dt * drift.a1.derivative(w);
    const double d2 = dt * drift.a2.derivative(w);
    for (int j = 0; j < i; ++j) {
      out.Dh(i, j) = d1;
      out.Dh(n + i, j) = d2;
    }
  }
  return out;
}

Det2 det2(const Matrix& M) {
  const Eigen::Index d = M.rows();
  const double det = (Matrix::Identity(d, d) + M).partialPivLu().determinant();
  return {det * std::exp(-M.trace()), !(det > 0.0)};
}

Det2 det2_eigen(const Matrix& M) {
  Eigen::EigenSolver<Matrix> es(M, false);
  std::complex<double> prod(1.0, 0.0);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    const std::complex<double> l = es.eigenvalues()(i);
    prod *= (1.0 + l) * std::exp(-l);
  }
  return {prod.real(), !(prod.real() > 0.0)};
}

Det2 det2_drift(const CovModel& cov, const Matrix& Dh) {
  // S Dh = [[B, 0], [*, 0]] with B = Dh11 + V Dh21, so det2(S Dh) = det2(B).
  const int n = cov.n();
  const Matrix B = Dh.topLeftCorner(n, n) + cov.V * Dh.bottomLeftCorner(n, n);
  return det2(B);
}

QuasiNilpotence quasinilpotence_certificate(const Matrix& M, int k_max) {
  QuasiNilpotence q;
  Matrix P = Matrix::Identity(M.rows(), M.cols());
  for (int k = 1; k <= k_max; ++k) {
    P = P * M;
    q.curve.push_back(std::pow(operator_norm(P), 1.0 / k));
  }
  return q;
}

QuasiNilpotence quasinilpotence_certificate(const CovModel& cov, const DriftSpec& drift, const Matrix& Dh,
                                            int k_max) {
  QuasiNilpotence q = quasinilpotence_certificate(cov.S * Dh, k_max);
  const double c = cov.grid.horizon() * std::pow(drift.derivative_bound(), 2);
  const double snorm = operator_norm(cov.S);
  double log_fact = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    log_fact += std::log(static_cast<double>(k));
    q.bound.push_back(snorm * std::sqrt(c) * std::exp(-log_fact / (2.0 * k)));
  }
  return q;
}

DensityEval density_p(const DriftSpec& drift, const Vector& xi, const CovModel& cov) {
  const NoiseSample sample = sample_from_correlated(cov, xi);
  return density_p(drift, sample, cov);
}

DensityEval density_p(const DriftSpec& drift, const NoiseSample& sample, const CovModel& cov) {
  DensityEval e;
  if (drift.is_zero()) return e;
  const DriftJacobian dj = drift_jacobian(drift, sample, cov);
  const Vector g = cov.S_inv * dj.h;
  // J(S^{-1}h) = (S^{-1}h, xi) - trace of the coordinate Jacobian, which is tr(Dh).
  e.divergence_term = g.dot(sample.xi) - dj.Dh.trace();
  e.quadratic_term = 0.5 * g.dot(dj.h);
  const Det2 z = det2_drift(cov, dj.Dh);
  e.zeta = z.value;
  e.singular = z.singular;
  e.log_value = std::log(std::abs(e.zeta)) + e.divergence_term - e.quadratic_term;
  e.value = e.zeta * std::exp(e.divergence_term - e.quadratic_term);
  return e;
}

Vector euler_map(const DriftSpec& drift, const Vector& xi, const CovModel& cov) {
  const int n = cov.n();
  const double dt = cov.grid.dt();
  const double s = std::sqrt(dt);
  Vector y(2 * n);
  double x1 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a1 = drift.a1(x1);
    const double a2 = drift.a2(x1);
    y(i) = xi(i) + s * a1;
    y(n + i) = xi(n + i) + s * a2;
    x1 += a1 * dt + s * xi(i);
  }
  return y;
}

}  // namespace wiener
