#include "wiener/smoothing.hpp"

#include "wiener/parallel.hpp"
#include "wiener/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wiener {

TestFunction TestFunction::gaussian(double s) {
  if (!(s > 0.0)) throw std::invalid_argument("gaussian test function: width must be positive");
  const double v = s * s;
  return {"gaussian",
          [v](double r) { return std::exp(-r * r / (2.0 * v)); },
          [v](double r) { return -r / v * std::exp(-r * r / (2.0 * v)); },
          [v](double r) { return (r * r / v - 1.0) / v * std::exp(-r * r / (2.0 * v)); }};
}

TestFunction TestFunction::identity() {
  return {"identity", [](double r) { return r; }, [](double) { return 1.0; }, [](double) { return 0.0; }};
}

TestFunction TestFunction::constant(double c) {
  return {"one", [c](double) { return c; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
}

TestFunction TestFunction::preset(const std::string& name, double s) {
  if (name == "gaussian") return gaussian(s);
  if (name == "identity") return identity();
  if (name == "one") return constant(1.0);
  throw std::invalid_argument("unknown test function '" + name + "'");
}

int RGrid::nearest(double r) const {
  const int i = static_cast<int>(std::lround((r - r_min) / dr()));
  return std::clamp(i, 0, points - 1);
}

void validate(const SmoothingModel& model) {
  check_smallness(model.drift, model.cov);
  if (model.r_grid.points < 3 || !(model.r_grid.r_max > model.r_grid.r_min))
    throw std::invalid_argument("r_grid: need at least 3 points on a non-empty interval");
  const double pad = 3.0 * std::sqrt(model.cov.grid.horizon());
  const int probes = 4 * model.r_grid.points;
  const double lo = model.r_grid.r_min - pad;
  const double hi = model.r_grid.r_max + pad;
  for (int i = 0; i <= probes; ++i) {
    const double r = lo + (hi - lo) * i / probes;
    if (!std::isfinite(model.f(r)) || !std::isfinite(model.f.d1(r)) || !std::isfinite(model.f.d2(r)))
      throw std::invalid_argument("test function is not finite near the r-grid");
  }
}

ModelPath simulate_path(const SmoothingModel& model, std::uint64_t seed, std::uint64_t index) {
  const int n = model.cov.n();
  const double dt = model.cov.grid.dt();
  ModelPath p{sample_pair(model.cov, seed, index), Vector::Zero(n + 1), Vector::Zero(n + 1)};
  for (int i = 0; i < n; ++i) {
    const double x = p.x1(i);
    p.x1(i + 1) = x + model.drift.a1(x) * dt + (p.noise.w1(i + 1) - p.noise.w1(i));
    p.x2(i + 1) = p.x2(i) + model.drift.a2(x) * dt + (p.noise.w2(i + 1) - p.noise.w2(i));
  }
  return p;
}

PathBundle simulate_model(const SmoothingModel& model, std::uint64_t seed, std::size_t m) {
  if (m < 1) throw std::invalid_argument("simulate_model: m must be >= 1");
  const int n = model.cov.n();
  const auto rows = static_cast<Eigen::Index>(m);
  PathBundle b{Matrix(rows, n + 1), Matrix(rows, n + 1), Matrix(rows, n + 1), Matrix(rows, n + 1)};
  const ChunkPlan plan = plan_chunks(m, 1024);
  parallel_chunks(plan.chunks(), [&](std::size_t c) {
    for (std::size_t i = plan.begin(c); i < plan.end(c); ++i) {
      const ModelPath p = simulate_path(model, seed, i);
      const auto r = static_cast<Eigen::Index>(i);
      b.x1.row(r) = p.x1.transpose();
      b.x2.row(r) = p.x2.transpose();
      b.w1.row(r) = p.noise.w1.transpose();
      b.w2.row(r) = p.noise.w2.transpose();
    }
  });
  return b;
}

Vector observation_coordinates(const Vector& path, double dt) {
  const Eigen::Index n = path.size() - 1;
  Vector xi(n);
  const double inv = 1.0 / std::sqrt(dt);
  for (Eigen::Index i = 0; i < n; ++i) xi(i) = (path(i + 1) - path(i)) * inv;
  return xi;
}

SmootherOutput bayes_smoother(const SmoothingModel& model, const Vector& observed_x2, int t_index,
                              std::uint64_t seed, std::size_t m) {
  const CovModel& cov = model.cov;
  const int n = cov.n();
  if (observed_x2.size() != n + 1) throw std::invalid_argument("bayes_smoother: observed path must have n + 1 points");
  if (t_index < 0 || t_index > n) throw std::invalid_argument("bayes_smoother: t_index out of range");
  if (m < 2) throw std::invalid_argument("bayes_smoother: need at least 2 samples");
  const double dt = cov.grid.dt();
  const double s = std::sqrt(dt);

  // xi1 | xi2 ~ N(V xi2, I - V V^T).
  const Vector xi2 = observation_coordinates(observed_x2, dt);
  const Vector mean1 = cov.V * xi2;
  const Matrix cond = Matrix::Identity(n, n) - cov.V * cov.V.transpose();
  Eigen::LLT<Matrix> llt(cond);
  if (llt.info() != Eigen::Success) throw std::runtime_error("bayes_smoother: conditional covariance not positive definite");
  const Matrix L = llt.matrixL();

  const int R = model.r_grid.points;
  const ChunkPlan plan = plan_chunks(m, 1024);
  struct Partial {
    double sw = 0.0, sw2 = 0.0, swf = 0.0;
    std::vector<double> w, f;
    Matrix hist;
    bool singular = false;
  };
  std::vector<Partial> parts(plan.chunks());
  parallel_chunks(plan.chunks(), [&](std::size_t c) {
    Partial& P = parts[c];
    P.hist = Matrix::Zero(n + 1, R);
    Vector z(n), xi(2 * n);
    xi.tail(n) = xi2;
    for (std::size_t k = plan.begin(c); k < plan.end(c); ++k) {
      CounterRng rng(seed, k);
      rng.fill_normal(std::span<double>(z.data(), static_cast<std::size_t>(n)));
      xi.head(n) = mean1 + L * z;
      const DensityEval e = density_p(model.drift, xi, cov);
      P.singular = P.singular || e.singular;
      const double w = e.value;
      double w1 = 0.0;
      P.hist(0, model.r_grid.nearest(0.0)) += w;
      double ft = 0.0;
      for (int i = 0; i < n; ++i) {
        w1 += s * xi(i);
        P.hist(i + 1, model.r_grid.nearest(w1)) += w;
        if (i + 1 == t_index) ft = model.f(w1);
      }
      if (t_index == 0) ft = model.f(0.0);
      P.sw += w;
      P.sw2 += w * w;
      P.swf += w * ft;
      P.w.push_back(w);
      P.f.push_back(ft);
    }
  });

  SmootherOutput out;
  out.pi = Matrix::Zero(n + 1, R);
  double sw = 0.0, sw2 = 0.0, swf = 0.0;
  for (const auto& P : parts) {
    sw += P.sw;
    sw2 += P.sw2;
    swf += P.swf;
    out.pi += P.hist;
    out.singular = out.singular || P.singular;
  }
  if (!(sw > 0.0)) throw std::runtime_error("bayes_smoother: all importance weights vanished");
  out.psi = swf / sw;
  double var = 0.0;
  for (const auto& P : parts)
    for (std::size_t k = 0; k < P.w.size(); ++k) var += P.w[k] * P.w[k] * (P.f[k] - out.psi) * (P.f[k] - out.psi);
  out.standard_error = std::sqrt(var) / sw;
  out.ess = sw * sw / sw2;
  out.unreliable = out.ess < 100.0;
  for (int i = 0; i <= n; ++i) out.pi.row(i) /= out.pi.row(i).sum();
  return out;
}

}  // namespace wiener
