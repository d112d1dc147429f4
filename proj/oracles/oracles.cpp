#include "oracles.hpp"

#include "wiener/parallel.hpp"
#include "wiener/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wiener::oracle {

Matrix w1_given_w2_regression(const TimeGrid& grid, const Matrix& V) {
  const int n = grid.steps();
  const double dt = grid.dt();
  // Cov(w2(t_a), w2(t_b)) = min(t_a, t_b); Cov(w1(t_k), w2(t_b)) = dt sum_{i<k, j<b} V(i, j).
  Matrix c22(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) c22(a, b) = grid.time(std::min(a, b) + 1);
  Matrix c12 = Matrix::Zero(n + 1, n);
  for (int k = 1; k <= n; ++k)
    for (int b = 1; b <= n; ++b) {
      double s = 0.0;
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < b; ++j) s += V(i, j);
      c12(k, b - 1) = dt * s;
    }
  return c12 * c22.inverse();
}

double finite_dimensional_divergence(const std::function<Vector(const Vector&)>& u, const Vector& z, double eps) {
  const Vector u0 = u(z);
  double div = u0.dot(z);
  Vector p = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const auto at = [&](double d) {
      p(i) = z(i) + d;
      const double v = u(p)(i);
      p(i) = z(i);
      return v;
    };
    const double d = (-at(2 * eps) + 8.0 * at(eps) - 8.0 * at(-eps) + at(-2 * eps)) / (12.0 * eps);
    div -= d;
  }
  return div;
}

double log_gaussian_density(const Matrix& S, const Vector& x) {
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("log_gaussian_density: S not positive definite");
  const Vector y = llt.matrixL().solve(x);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < S.rows(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * y.squaredNorm() - 0.5 * logdet - 0.5 * static_cast<double>(S.rows()) * std::log(2.0 * std::numbers::pi);
}

double gaussian_shift_ratio(const Matrix& S, const Vector& h, const Vector& x) {
  return std::exp(log_gaussian_density(S, x - h) - log_gaussian_density(S, x));
}

namespace {

// Increments of (x1, x2) / sqrt(dt) produced by the noise xi.
Vector forward_euler(const DriftSpec& drift, const Vector& xi, int n, double dt) {
  Vector out(2 * n);
  double x1 = 0.0, x2 = 0.0;
  const double s = std::sqrt(dt);
  for (int i = 0; i < n; ++i) {
    const double n1 = x1 + drift.a1(x1) * dt + s * xi(i);
    const double n2 = x2 + drift.a2(x1) * dt + s * xi(n + i);
    out(i) = (n1 - x1) / s;
    out(n + i) = (n2 - x2) / s;
    x1 = n1;
    x2 = n2;
  }
  return out;
}

Matrix fd_jacobian(const DriftSpec& drift, const Vector& xi, int n, double dt) {
  const double eps = 1e-6;
  Matrix J(2 * n, 2 * n);
  Vector p = xi;
  for (int j = 0; j < 2 * n; ++j) {
    p(j) = xi(j) + eps;
    const Vector up = forward_euler(drift, p, n, dt);
    p(j) = xi(j) - eps;
    const Vector dn = forward_euler(drift, p, n, dt);
    p(j) = xi(j);
    J.col(j) = (up - dn) / (2.0 * eps);
  }
  return J;
}

}  // namespace

std::optional<double> exact_density(const DriftSpec& drift, const Vector& y, const Matrix& S, int n, double dt) {
  Vector xi = y;
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    const Vector r = forward_euler(drift, xi, n, dt) - y;
    if (r.lpNorm<Eigen::Infinity>() < 1e-13) {
      converged = true;
      break;
    }
    xi -= fd_jacobian(drift, xi, n, dt).partialPivLu().solve(r);
  }
  if (!converged) return std::nullopt;
  const double det = fd_jacobian(drift, xi, n, dt).partialPivLu().determinant();
  return std::exp(log_gaussian_density(S, xi) - log_gaussian_density(S, y)) / std::abs(det);
}

double heat_gaussian(double s, double r, double t) {
  const double v = s * s + t;
  return s / std::sqrt(v) * std::exp(-r * r / (2.0 * v));
}

McSurface feynman_kac(const std::function<double(double)>& a, const std::function<double(double)>& f,
                      const RGrid& r_grid, const TimeGrid& grid, int substeps, std::size_t paths,
                      std::uint64_t seed) {
  const int n = grid.steps();
  const int R = r_grid.points;
  const double h = grid.dt() / substeps;
  const double sh = std::sqrt(h);
  const ChunkPlan plan = plan_chunks(paths, 512);
  std::vector<std::pair<Matrix, Matrix>> parts(plan.chunks());
  parallel_chunks(plan.chunks(), [&](std::size_t c) {
    Matrix s1 = Matrix::Zero(n + 1, R), s2 = Matrix::Zero(n + 1, R);
    std::vector<double> x(static_cast<std::size_t>(R));
    for (std::size_t p = plan.begin(c); p < plan.end(c); ++p) {
      CounterRng rng(seed, p);
      for (int r = 0; r < R; ++r) x[static_cast<std::size_t>(r)] = r_grid.r(r);
      for (int i = 0; i <= n; ++i) {
        if (i > 0) {
          for (int q = 0; q < substeps; ++q) {
            const double dw = sh * rng.normal();
            for (auto& v : x) v += a(v) * h + dw;
          }
        }
        for (int r = 0; r < R; ++r) {
          const double y = f(x[static_cast<std::size_t>(r)]);
          s1(i, r) += y;
          s2(i, r) += y * y;
        }
      }
    }
    parts[c] = {std::move(s1), std::move(s2)};
  });
  Matrix s1 = Matrix::Zero(n + 1, R), s2 = Matrix::Zero(n + 1, R);
  for (const auto& p : parts) {
    s1 += p.first;
    s2 += p.second;
  }
  const double m = static_cast<double>(paths);
  McSurface out;
  out.mean = s1 / m;
  out.standard_error = ((s2 / m - out.mean.cwiseProduct(out.mean)).cwiseMax(0.0) / m).cwiseSqrt();
  return out;
}

TubeEstimate tube_conditioning(const SmoothingModel& model, const Vector& observed_x2, int t_index,
                               std::size_t paths, std::uint64_t seed, const std::vector<double>& bandwidths) {
  const CovModel& cov = model.cov;
  const int n = cov.n();
  const double dt = cov.grid.dt();
  const double s = std::sqrt(dt);
  const int H = static_cast<int>(bandwidths.size());
  if (H < 3) throw std::invalid_argument("tube_conditioning: need at least 3 bandwidths");
  Vector obs(n);
  for (int i = 0; i < n; ++i) obs(i) = (observed_x2(i + 1) - observed_x2(i)) / s;

  // Per path: f(x1(t)) and squared distance of the observation increments.
  std::vector<double> fv(paths), d2(paths);
  const ChunkPlan plan = plan_chunks(paths, 4096);
  parallel_chunks(plan.chunks(), [&](std::size_t c) {
    for (std::size_t k = plan.begin(c); k < plan.end(c); ++k) {
      const NoiseSample ns = sample_pair(cov, seed, k);
      double x1 = 0.0, x2 = 0.0, ft = model.f(0.0), dist = 0.0;
      for (int i = 0; i < n; ++i) {
        const double dx2 = model.drift.a2(x1) * dt + (ns.w2(i + 1) - ns.w2(i));
        x1 += model.drift.a1(x1) * dt + (ns.w1(i + 1) - ns.w1(i));
        x2 += dx2;
        const double e = dx2 / s - obs(i);
        dist += e * e;
        if (i + 1 == t_index) ft = model.f(x1);
      }
      fv[k] = ft;
      d2[k] = dist;
    }
  });

  TubeEstimate out;
  out.bandwidths = bandwidths;
  std::vector<double> W(static_cast<std::size_t>(H), 0.0);
  for (int b = 0; b < H; ++b) {
    const double inv = 1.0 / (2.0 * bandwidths[static_cast<std::size_t>(b)] * bandwidths[static_cast<std::size_t>(b)]);
    double sw = 0.0, swf = 0.0, sw2 = 0.0;
    for (std::size_t k = 0; k < paths; ++k) {
      const double w = std::exp(-d2[k] * inv);
      sw += w;
      sw2 += w * w;
      swf += w * fv[k];
    }
    if (!(sw > 0.0)) throw std::runtime_error("tube_conditioning: empty tube");
    W[static_cast<std::size_t>(b)] = sw;
    out.per_bandwidth.push_back(swf / sw);
    out.effective_counts.push_back(sw * sw / sw2);
  }
  // Least-squares quadratic in h^2; the intercept is a fixed linear combination of the
  // per-bandwidth estimates.
  Matrix X(H, 3);
  for (int b = 0; b < H; ++b) {
    const double u = bandwidths[static_cast<std::size_t>(b)] * bandwidths[static_cast<std::size_t>(b)];
    X(b, 0) = 1.0;
    X(b, 1) = u;
    X(b, 2) = u * u;
  }
  const Matrix pinv = (X.transpose() * X).inverse() * X.transpose();
  const Vector lambda = pinv.row(0).transpose();
  double value = 0.0;
  for (int b = 0; b < H; ++b) value += lambda(b) * out.per_bandwidth[static_cast<std::size_t>(b)];
  out.value = value;
  // Influence of each path on the intercept, for the standard error.
  double var = 0.0;
  std::vector<double> inv2h(static_cast<std::size_t>(H));
  for (int b = 0; b < H; ++b)
    inv2h[static_cast<std::size_t>(b)] = 1.0 / (2.0 * bandwidths[static_cast<std::size_t>(b)] * bandwidths[static_cast<std::size_t>(b)]);
  for (std::size_t k = 0; k < paths; ++k) {
    double phi = 0.0;
    for (int b = 0; b < H; ++b) {
      const auto bu = static_cast<std::size_t>(b);
      phi += lambda(b) * std::exp(-d2[k] * inv2h[bu]) * (fv[k] - out.per_bandwidth[bu]) / W[bu];
    }
    var += phi * phi;
  }
  out.standard_error = std::sqrt(var);
  return out;
}

}  // namespace wiener::oracle
