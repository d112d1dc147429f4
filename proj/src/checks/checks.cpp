#include "checks.hpp"

#include "oracles.hpp"
#include "wiener/chaos.hpp"
#include "wiener/gsro.hpp"
#include "wiener/parallel.hpp"
#include "wiener/rng.hpp"
#include "wiener/smoothing.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wiener::checks {

namespace {

bool full(const CheckConfig& c) { return c.scale == Scale::kFull; }

double tolerance(const CheckConfig& c, const std::string& id, double fallback) {
  const auto it = c.tolerance.find(id);
  return it == c.tolerance.end() ? fallback : it->second;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

Matrix random_matrix(int rows, int cols, CounterRng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

Vector random_vector(int d, CounterRng& rng) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.normal();
  return v;
}

/// Contraction with operator norm `norm`.
Matrix random_contraction(int d, CounterRng& rng, double norm) {
  const Matrix m = random_matrix(d, d, rng);
  return m * (norm / operator_norm(m));
}

/// Random chaos vector whose degree-k part has chaos norm about one, up to degree `top`.
ChaosVector random_chaos(int dim, int capacity, int top, CounterRng& rng, Basis basis = Basis::kWhitened) {
  ChaosVector v(dim, capacity, basis);
  for (int k = 0; k <= top; ++k) {
    const double s = 1.0 / std::sqrt(factorial(k) * std::pow(static_cast<double>(dim), k));
    for (double& a : v.degree(k)) a = s * rng.normal();
  }
  return v;
}

VectorChaos random_field(int h_dim, int dim, int capacity, int top, CounterRng& rng) {
  VectorChaos x;
  for (int h = 0; h < h_dim; ++h) x.components.push_back(random_chaos(dim, capacity, top, rng));
  return x;
}

/// x_j a polynomial of degree <= top in the correlated coordinates of cells before j, in
/// whitened coordinates.
VectorChaos adapted_integrand(const CovModel& cov, int capacity, int top, CounterRng& rng) {
  const int n = cov.n();
  VectorChaos x;
  for (int j = 0; j < n; ++j) {
    ChaosVector v(2 * n, capacity, Basis::kCorrelated);
    v.degree(0)[0] = rng.normal();
    for (int k = 1; k <= top; ++k) {
      const auto& t = v.table(k);
      for (std::size_t p = 0; p < t.size(); ++p) {
        bool past = true;
        for (int c : t.index(p)) past = past && (c % n) < j;
        if (past) v.degree(k)[p] = rng.normal() / factorial(k);
      }
    }
    x.components.push_back(substitute(v, cov.S_half, Basis::kWhitened));
  }
  return x;
}

struct Moments {
  double s1 = 0.0, s2 = 0.0;
  std::size_t m = 0;
  void add(double x) {
    s1 += x;
    s2 += x * x;
    ++m;
  }
  void merge(const Moments& o) {
    s1 += o.s1;
    s2 += o.s2;
    m += o.m;
  }
  double mean() const { return s1 / static_cast<double>(m); }
  double se() const {
    const double mu = mean();
    const double var = std::max(0.0, s2 / static_cast<double>(m) - mu * mu);
    return std::sqrt(var / static_cast<double>(m - 1));
  }
};

void finish(CheckRecord& r, double measured, double tol, std::string detail) {
  r.measured = measured;
  r.tolerance = tol;
  r.passed = std::isfinite(measured) && measured <= tol;
  r.detail = std::move(detail);
}

// ---- chaos algebra --------------------------------------------------------------------

CheckRecord chaos_norm(const CheckConfig& cfg) {
  CheckRecord r;
  const int n = 8, d = 2 * n, K = 4;
  const int count = full(cfg) ? 20 : 5;
  const std::size_t m = full(cfg) ? 100000 : 20000;
  CounterRng rng(cfg.seed, 101);
  std::vector<ChaosVector> alphas;
  for (int q = 0; q < count; ++q) alphas.push_back(random_chaos(d, K, K, rng));

  // Flatten multiplicity-weighted coefficients so evaluation is a dot product with the
  // Hermite features.
  const ChaosVector& proto = alphas.front();
  std::vector<std::size_t> offsets{0};
  for (int k = 0; k <= K; ++k) offsets.push_back(offsets.back() + proto.table(k).size());
  const auto F = static_cast<Eigen::Index>(offsets.back());
  Matrix W(F, count);
  for (int q = 0; q < count; ++q)
    for (int k = 0; k <= K; ++k) {
      const auto& t = proto.table(k);
      for (std::size_t p = 0; p < t.size(); ++p)
        W(static_cast<Eigen::Index>(offsets[static_cast<std::size_t>(k)] + p), q) =
            t.multiplicity(p) * alphas[static_cast<std::size_t>(q)].degree(k)[p];
    }

  const ChunkPlan plan = plan_chunks(m, 1024);
  std::vector<Matrix> parts(plan.chunks());
  parallel_chunks(plan.chunks(), [&](std::size_t c) {
    Matrix acc = Matrix::Zero(4, count);
    std::vector<double> z(static_cast<std::size_t>(d));
    Vector feat(F);
    for (std::size_t s = plan.begin(c); s < plan.end(c); ++s) {
      CounterRng g(cfg.seed + 1, s);
      g.fill_normal(z);
      const auto h = hermite_features(d, K, z);
      for (int k = 0; k <= K; ++k)
        for (std::size_t p = 0; p < h[static_cast<std::size_t>(k)].size(); ++p)
          feat(static_cast<Eigen::Index>(offsets[static_cast<std::size_t>(k)] + p)) = h[static_cast<std::size_t>(k)][p];
      const Eigen::RowVectorXd v = feat.transpose() * W;
      for (int q = 0; q < count; ++q) {
        const double x = v(q);
        acc(0, q) += x;
        acc(1, q) += x * x;
        acc(2, q) += x * x * x;
        acc(3, q) += x * x * x * x;
      }
    }
    parts[c] = std::move(acc);
  });
  Matrix S = Matrix::Zero(4, count);
  for (const auto& p : parts) S += p;
  S /= static_cast<double>(m);

  const double tol = tolerance(cfg, "chaos_norm", 4.0);
  double worst = 0.0;
  Table t{"chaos_norm", {"functional", "mc_variance", "chaos_variance", "standard_error"}, {}};
  for (int q = 0; q < count; ++q) {
    const double mu = S(0, q), m2 = S(1, q), m3 = S(2, q), m4 = S(3, q);
    const double var = m2 - mu * mu;
    const double c4 = m4 - 4 * mu * m3 + 6 * mu * mu * m2 - 3 * mu * mu * mu * mu;
    const double se = std::sqrt(std::max(0.0, c4 - var * var) / static_cast<double>(m));
    const ChaosVector& a = alphas[static_cast<std::size_t>(q)];
    const double target = norm_sq(a) - a.mean() * a.mean();
    worst = std::max(worst, std::abs(var - target) / se);
    t.rows.push_back({static_cast<double>(q), var, target, se});
  }
  r.tables.push_back(std::move(t));
  finish(r, worst, tol,
         std::to_string(count) + " functionals, n = 8, K = 4, m = " + std::to_string(m) +
             "; worst |variance - sum k!|A_k|^2| in standard errors");
  return r;
}

CheckRecord second_quantization_exp(const CheckConfig& cfg) {
  CheckRecord r;
  const int d = 8, K = 6;
  const int trials = full(cfg) ? 50 : 10;
  CounterRng rng(cfg.seed, 102);
  double worst = 0.0;
  for (int q = 0; q < trials; ++q) {
    const Matrix C = random_contraction(d, rng, 0.2 + 0.8 * rng.uniform());
    const Vector phi = random_vector(d, rng) / std::sqrt(static_cast<double>(d));
    const ChaosVector lhs = second_quantization(C, exp_vector(phi, K));
    const ChaosVector rhs = exp_vector(C.transpose() * phi, K);
    worst = std::max(worst, std::sqrt(norm_sq(lhs - rhs)));
  }
  finish(r, worst, tolerance(cfg, "second_quantization_exp", 1e-12),
         std::to_string(trials) + " contractions, dim 8, K = 6; worst chaos-norm error");
  return r;
}

CheckRecord conditional_representation(const CheckConfig& cfg) {
  CheckRecord r;
  const int d = 6, K = 4;
  const int count = full(cfg) ? 10 : 4;
  const std::size_t m = full(cfg) ? 100000 : 20000;
  CounterRng rng(cfg.seed, 103);
  double worst = 0.0;
  Table t{"conditional_representation", {"functional", "chaos", "monte_carlo", "standard_error"}, {}};
  for (int q = 0; q < count; ++q) {
    const ChaosVector alpha = random_chaos(d, K, K, rng);
    const Matrix C = random_contraction(d, rng, 0.5 + 0.5 * rng.uniform());
    const Vector xi = random_vector(d, rng);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Matrix::Identity(d, d) - C * C.transpose());
    const Matrix root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                        eig.eigenvectors().transpose();
    const Vector mean = C * xi;
    const ChunkPlan plan = plan_chunks(m, 4096);
    std::vector<Moments> parts(plan.chunks());
    parallel_chunks(plan.chunks(), [&](std::size_t c) {
      Vector z(d);
      for (std::size_t s = plan.begin(c); s < plan.end(c); ++s) {
        CounterRng g(cfg.seed + 2 + static_cast<std::uint64_t>(q), s);
        g.fill_normal(std::span<double>(z.data(), static_cast<std::size_t>(d)));
        parts[c].add(evaluate(alpha, Vector(mean + root * z)));
      }
    });
    Moments mc;
    for (const auto& p : parts) mc.merge(p);
    const double chaos = evaluate(second_quantization(C, alpha), xi);
    worst = std::max(worst, std::abs(chaos - mc.mean()) / mc.se());
    t.rows.push_back({static_cast<double>(q), chaos, mc.mean(), mc.se()});
  }
  r.tables.push_back(std::move(t));
  finish(r, worst, tolerance(cfg, "conditional_representation", 4.0),
         std::to_string(count) + " polynomials, dim 6, K = 4, m = " + std::to_string(m) +
             "; worst |Gamma(C) alpha - E(alpha(eta) | xi)| in standard errors");
  return r;
}

CheckRecord calculus_identities(const CheckConfig& cfg) {
  CheckRecord r;
  const int n = 8, d = 2 * n, K = 4;
  const int count = full(cfg) ? 50 : 10;
  CounterRng rng(cfg.seed, 110);
  double worst_product = 0.0, worst_derivative = 0.0;
  for (int q = 0; q < count; ++q) {
    // alpha I(x) = I(alpha x) + (x, D alpha)
    const ChaosVector alpha = random_chaos(d, K, 2, rng);
    const VectorChaos x = random_field(d, d, K, 1, rng);
    const ChaosVector lhs = product(alpha, divergence(x, K), K);
    ChaosVector rhs = divergence(multiply(alpha, x, K - 1), K);
    const VectorChaos da = derivative(alpha);
    for (int h = 0; h < d; ++h) rhs += product(x[h], da[h], K);
    worst_product = std::max(worst_product, std::sqrt(norm_sq(lhs - rhs)));

    // (D I(y), h) = (y, h) + I((D y, h))
    const VectorChaos y = random_field(d, d, K - 1, K - 1, rng);
    const Vector hv = random_vector(d, rng);
    const ChaosVector l2 = pair(derivative(divergence(y, K)), hv);
    const ChaosVector r2 = pair(y, hv).with_capacity(K - 1) + divergence(directional_derivative(y, hv), K - 1);
    worst_derivative = std::max(worst_derivative, std::sqrt(norm_sq(l2.with_capacity(K - 1) - r2)));
  }
  finish(r, std::max(worst_product, worst_derivative), tolerance(cfg, "calculus_identities", 1e-10),
         std::to_string(count) + " instances, n = 8, K = 4; product rule error " + fmt(worst_product) +
             ", derivative-of-integral error " + fmt(worst_derivative));
  return r;
}

// ---- GSROs and integrators ------------------------------------------------------------

CheckRecord gsro_commutation(const CheckConfig& cfg) {
  CheckRecord r;
  const int n = 8, K = 4;
  const int count = full(cfg) ? 3 : 1;
  const CovModel cov = build_covariance(TimeGrid(1.0, n), CrossCovarianceSpec::scalar(0.5));
  const Gsro A = ito_gsro(cov);
  CounterRng rng(cfg.seed, 104);
  const std::vector<std::pair<std::string, Matrix>> ops = {
      {"identity", Matrix::Identity(2 * n, 2 * n)},
      {"zero", Matrix::Zero(2 * n, 2 * n)},
      {"projector", conditional_projector(cov)},
      {"contraction", random_contraction(2 * n, rng, 0.9)}};
  double worst = 0.0;
  std::string detail = "n = 8, K = 4, Ito GSRO;";
  for (const auto& [name, C] : ops) {
    double w = 0.0;
    for (int q = 0; q < count; ++q) {
      CounterRng g(cfg.seed + 3, static_cast<std::uint64_t>(q));
      w = std::max(w, commutation_check(C, A, adapted_integrand(cov, K - 1, K - 1, g)));
    }
    detail += " " + name + " " + fmt(w);
    worst = std::max(worst, w);
  }
  finish(r, worst, tolerance(cfg, "gsro_commutation", 1e-8), detail);
  return r;
}

CheckRecord extended_equals_ito(const CheckConfig& cfg) {
  CheckRecord r;
  const int n = 8, K = 3;
  const int paths = full(cfg) ? 100 : 20;
  const CovModel cov = build_covariance(TimeGrid(1.0, n), CrossCovarianceSpec::scalar(0.4));
  CounterRng rng(cfg.seed, 105);
  const VectorChaos x = adapted_integrand(cov, K, K, rng);
  const VectorChaos y = gsro_apply(ito_gsro(cov), x);
  double worst = 0.0;
  for (int p = 0; p < paths; ++p) {
    const NoiseSample s = sample_pair(cov, cfg.seed + 4, static_cast<std::uint64_t>(p));
    double ito = 0.0;
    for (int j = 0; j < n; ++j) {
      ito += evaluate(x[j], s.xi_prime) * (s.w1(j + 1) - s.w1(j)) / std::sqrt(cov.grid.dt());
      worst = std::max(worst, std::abs(evaluate(y[j], s.xi_prime) - ito));
    }
  }
  finish(r, worst, tolerance(cfg, "extended_equals_ito", 1e-10),
         std::to_string(paths) + " paths, n = 8, adapted integrands of degree 3; worst pathwise difference");
  return r;
}

CheckRecord fbm_covariance(const CheckConfig& cfg) {
  CheckRecord r;
  const int n = 64;
  const std::size_t m = full(cfg) ? 100000 : 20000;
  const TimeGrid grid(1.0, n);
  const double pct = tolerance(cfg, "fbm_covariance", 0.03);
  std::vector<int> pts;
  for (int i = 8; i <= n; i += 8) pts.push_back(i);
  const auto P = static_cast<int>(pts.size());
  double worst = 0.0;
  Table t{"fbm_covariance", {"hurst", "s", "t", "simulated", "exact", "standard_error"}, {}};
  std::string detail = "n = 64, m = " + std::to_string(m) + ";";
  for (double a : {0.6, 0.75, 0.9}) {
    const FbmKernel k = fbm_kernel(a, grid);
    Matrix Ksub(P, n);
    for (int i = 0; i < P; ++i) Ksub.row(i) = k.kernel.row(pts[static_cast<std::size_t>(i)]);
    const ChunkPlan plan = plan_chunks(m, 2048);
    std::vector<std::pair<Matrix, Matrix>> parts(plan.chunks());
    parallel_chunks(plan.chunks(), [&](std::size_t c) {
      const auto cols = static_cast<Eigen::Index>(plan.end(c) - plan.begin(c));
      Matrix dw(n, cols);
      for (Eigen::Index s = 0; s < cols; ++s) {
        CounterRng g(cfg.seed + 5, plan.begin(c) + static_cast<std::size_t>(s));
        g.fill_normal(std::span<double>(dw.col(s).data(), static_cast<std::size_t>(n)));
      }
      const Matrix B = std::sqrt(grid.dt()) * Ksub * dw;
      Matrix s1 = B * B.transpose();
      Matrix s2 = Matrix::Zero(P, P);
      for (int i = 0; i < P; ++i)
        for (int j = 0; j <= i; ++j) s2(i, j) = (B.row(i).array().square() * B.row(j).array().square()).sum();
      parts[c] = {std::move(s1), std::move(s2)};
    });
    Matrix s1 = Matrix::Zero(P, P), s2 = Matrix::Zero(P, P);
    for (const auto& [a1, a2] : parts) {
      s1 += a1;
      s2 += a2;
    }
    const double md = static_cast<double>(m);
    double w = 0.0;
    for (int i = 0; i < P; ++i)
      for (int j = 0; j <= i; ++j) {
        const double cov = s1(i, j) / md;
        const double se = std::sqrt(std::max(0.0, s2(i, j) / md - cov * cov) / md);
        const double ti = grid.time(pts[static_cast<std::size_t>(i)]);
        const double tj = grid.time(pts[static_cast<std::size_t>(j)]);
        const double exact = k.covariance(tj, ti);
        const double allowed = std::max(pct, 4.0 * se);  // R(1, 1) = 1 is the largest entry
        w = std::max(w, std::abs(cov - exact) / allowed);
        t.rows.push_back({a, tj, ti, cov, exact, se});
      }
    detail += " hurst " + fmt(a) + ": " + fmt(w);
    worst = std::max(worst, w);
  }
  r.tables.push_back(std::move(t));
  finish(r, worst, 1.0, detail + " (error / max(3%, 4 SE))");
  return r;
}

CheckRecord integrator_constant(const CheckConfig& cfg) {
  CheckRecord r;
  const int n = 16;
  const int count = full(cfg) ? 20 : 5;
  const TimeGrid grid(1.0, n);
  const CovModel cov = build_covariance(grid, CrossCovarianceSpec::exponential_volterra(grid, 0.5, 1.5));
  CounterRng rng(cfg.seed, 107);
  double worst = 0.0, trial_worst = 0.0;
  for (int q = 0; q < count; ++q) {
    const double norm = q == 0 ? 1.0 : 0.2 + 0.8 * rng.uniform();
    const IntegratorProcess g = transported_integrator(cov, random_contraction(2 * n, rng, norm));
    const IntegratorBound b = integrator_bound(g, 1000, cfg.seed + static_cast<std::uint64_t>(q));
    worst = std::max(worst, b.exact);
    trial_worst = std::max(trial_worst, b.trial_max);
  }
  Table t{"fbm_integrator_constant", {"n", "hurst", "constant"}, {}};
  for (int m : {8, 16, 32, 64}) {
    const CovModel c = build_covariance(TimeGrid(1.0, m), CrossCovarianceSpec::zero());
    t.rows.push_back({static_cast<double>(m), 0.75, fbm_integrator(fbm_kernel(0.75, c.grid), c).bound_constant});
  }
  r.tables.push_back(std::move(t));
  finish(r, worst, tolerance(cfg, "integrator_constant", 1.0 + 1e-10),
         std::to_string(count) + " contractions, n = 16, Volterra cross-covariance; worst exact grid constant (max over 1000 random step integrands " +
             fmt(trial_worst) + ")");
  return r;
}

// ---- densities ----------------------------------------------------------------------

CheckRecord density_correctness(const CheckConfig& cfg) {
  CheckRecord r;
  const DriftSpec drift = DriftSpec::tanh_sin(0.1, 0.1);
  const double pointwise_tol = tolerance(cfg, "density_pointwise", 1e-6);
  double worst_rel = 0.0;
  {
    const TimeGrid g(1.0, 4);
    const CovModel cov = build_covariance(g, CrossCovarianceSpec::exponential_volterra(g, 0.5, 1.5));
    for (int p = 0; p < 100; ++p) {
      const Vector y = sample_pair(cov, cfg.seed + 6, static_cast<std::uint64_t>(p)).xi;
      const auto ref = oracle::exact_density(drift, y, cov.S, 4, g.dt());
      if (!ref) throw std::runtime_error("density oracle did not converge");
      worst_rel = std::max(worst_rel, std::abs(density_p(drift, y, cov).value / *ref - 1.0));
    }
  }
  const int n = 16;
  const std::size_t m = full(cfg) ? 100000 : 20000;
  const TimeGrid g(1.0, n);
  const CovModel cov = build_covariance(g, CrossCovarianceSpec::exponential_volterra(g, 0.5, 1.5));
  const ChunkPlan plan = plan_chunks(m, 2048);
  std::vector<Moments> parts(plan.chunks());
  parallel_chunks(plan.chunks(), [&](std::size_t c) {
    for (std::size_t s = plan.begin(c); s < plan.end(c); ++s)
      parts[c].add(density_p(drift, sample_pair(cov, cfg.seed + 7, s), cov).value);
  });
  Moments mean;
  for (const auto& p : parts) mean.merge(p);
  const double mean_ratio = std::abs(mean.mean() - 1.0) / (4.0 * mean.se());
  finish(r, std::max(worst_rel / pointwise_tol, mean_ratio), 1.0,
         "pointwise relative error vs change of variables (n = 4, 100 points) " + fmt(worst_rel) +
             "; E p = " + fmt(mean.mean()) + " +- " + fmt(mean.se()) + " (n = 16, m = " + std::to_string(m) +
             "); measured = max(error / 1e-6, |E p - 1| / 4 SE)");
  return r;
}

CheckRecord quasi_nilpotence(const CheckConfig& cfg) {
  CheckRecord r;
  const int n = 16;
  const int samples = full(cfg) ? 10 : 3;
  const TimeGrid g(1.0, n);
  const CovModel cov = build_covariance(g, CrossCovarianceSpec::exponential_volterra(g, 0.5, 1.5));
  const std::vector<DriftSpec> drifts = {DriftSpec::tanh_sin(0.2, 0.2), DriftSpec::linear(0.2, 0.2),
                                         DriftSpec::tanh_linear(0.2, 0.2)};
  double worst_det = 0.0;
  int violations = 0;
  Table t{"quasi_nilpotence", {"drift", "k", "norm_root", "factorial_bound"}, {}};
  for (std::size_t d = 0; d < drifts.size(); ++d) {
    check_smallness(drifts[d], cov);
    for (int s = 0; s < samples; ++s) {
      const DriftJacobian dj = drift_jacobian(drifts[d], sample_pair(cov, cfg.seed + 8, static_cast<std::uint64_t>(s)), cov);
      const Det2 z = det2(cov.S * dj.Dh);
      worst_det = std::max(worst_det, z.singular ? INFINITY : std::abs(z.value - 1.0));
      const QuasiNilpotence q = quasinilpotence_certificate(cov, drifts[d], dj.Dh, 2 * n);
      for (std::size_t k = 0; k < q.curve.size(); ++k) {
        if (q.curve[k] > q.bound[k]) ++violations;
        if (s == 0) t.rows.push_back({static_cast<double>(d), static_cast<double>(k + 1), q.curve[k], q.bound[k]});
      }
    }
  }
  r.tables.push_back(std::move(t));
  const double measured = violations > 0 ? INFINITY : worst_det;
  finish(r, measured, tolerance(cfg, "quasi_nilpotence", 1e-8),
         "n = 16, Volterra cross-covariance, drifts tanh_sin / linear / tanh_linear; worst |det2 - 1| " +
             fmt(worst_det) + ", bound violations " + std::to_string(violations));
  return r;
}

// ---- smoothing ----------------------------------------------------------------------

CheckRecord smoothing_spde(const CheckConfig& cfg) {
  CheckRecord r;
  const int n = full(cfg) ? 32 : 16;
  const int R = full(cfg) ? 64 : 32;
  const std::size_t paths = full(cfg) ? 100000 : 20000;
  const TimeGrid g(1.0, n);
  const SmoothingModel model{build_covariance(g, CrossCovarianceSpec::zero()), DriftSpec::preset("tanh", 0.5),
                             TestFunction::gaussian(1.0), RGrid{-8.0, 8.0, R}};
  validate(model);
  SpdeOptions opt;
  opt.max_degree = 1;  // no observation noise enters when V = 0
  const SpdeField u = solve_spde(model, opt);
  const oracle::McSurface fk =
      oracle::feynman_kac(model.drift.a1.value, model.f.value, model.r_grid, g, 8, paths, cfg.seed + 9);
  const Matrix mean = u.mean();
  const double pct = tolerance(cfg, "smoothing_spde", 0.02) * fk.mean.cwiseAbs().maxCoeff();
  double worst = 0.0;
  Table t{"spde_surface", {"t", "r", "spde", "feynman_kac", "standard_error"}, {}};
  for (int i = 1; i <= n; ++i)
    for (int j = 0; j < R; ++j) {
      const double allowed = std::max(pct, 3.0 * fk.standard_error(i, j));
      worst = std::max(worst, std::abs(mean(i, j) - fk.mean(i, j)) / allowed);
      t.rows.push_back({g.time(i), model.r_grid.r(j), mean(i, j), fk.mean(i, j), fk.standard_error(i, j)});
    }
  r.tables.push_back(std::move(t));
  finish(r, worst, 1.0,
         "a1 = 0.5 tanh, a2 = 0, V = 0, " + std::to_string(R) + " x " + std::to_string(n) +
             " (r, t) grid, Feynman-Kac paths " + std::to_string(paths) + "; error / max(2%, 3 SE)");
  return r;
}

CheckRecord bayes_smoother_check(const CheckConfig& cfg) {
  CheckRecord r;
  const int n = 8;
  const TimeGrid g(1.0, n);
  const std::size_t tube_paths = full(cfg) ? 1000000 : 200000;
  const std::size_t m = full(cfg) ? 100000 : 20000;
  const int t_index = n / 2;
  std::string detail;
  double worst = 0.0;

  // Informative model against the tube-conditioning oracle.
  const SmoothingModel model{build_covariance(g, CrossCovarianceSpec::exponential_volterra(g, 0.6, 1.0)),
                             DriftSpec::tanh_linear(0.1, 0.1), TestFunction::gaussian(1.0), RGrid{-4.0, 4.0, 33}};
  validate(model);
  // Observation: the draw with the smallest increments among the first 64, so the tube
  // around it is well populated.
  ModelPath obs = simulate_path(model, cfg.seed + 10, 0);
  for (std::uint64_t k = 1; k < 64; ++k) {
    ModelPath p = simulate_path(model, cfg.seed + 10, k);
    if (observation_coordinates(p.x2, g.dt()).norm() < observation_coordinates(obs.x2, g.dt()).norm()) obs = p;
  }
  const SmootherOutput sm = bayes_smoother(model, obs.x2, t_index, cfg.seed + 11, m);
  const oracle::TubeEstimate tube =
      oracle::tube_conditioning(model, obs.x2, t_index, tube_paths, cfg.seed + 12, {0.35, 0.5, 0.65, 0.8, 0.95});
  {
    const double bar = 3.0 * std::hypot(sm.standard_error, tube.standard_error);
    const double w = std::abs(sm.psi - tube.value) / bar;
    worst = std::max(worst, w);
    detail += "psi " + fmt(sm.psi) + " +- " + fmt(sm.standard_error) + " (ess " + fmt(sm.ess) + ") vs tube " +
              fmt(tube.value) + " +- " + fmt(tube.standard_error) + ";";
  }
  Table hist{"smoother_pi", {"t", "r", "mass"}, {}};
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j < model.r_grid.points; ++j) hist.rows.push_back({g.time(i), model.r_grid.r(j), sm.pi(i, j)});
  r.tables.push_back(std::move(hist));
  Table tb{"tube_bandwidths", {"bandwidth", "estimate", "effective_count"}, {}};
  for (std::size_t b = 0; b < tube.bandwidths.size(); ++b)
    tb.rows.push_back({tube.bandwidths[b], tube.per_bandwidth[b], tube.effective_counts[b]});
  r.tables.push_back(std::move(tb));

  // Uninformative model: psi is the unconditional expectation.
  const SmoothingModel flat{build_covariance(g, CrossCovarianceSpec::zero()), DriftSpec::preset("tanh", 0.3),
                            TestFunction::gaussian(1.0), RGrid{-4.0, 4.0, 33}};
  const oracle::McSurface fk =
      oracle::feynman_kac(flat.drift.a1.value, flat.f.value, RGrid{0.0, 1.0, 2}, g, 1, m, cfg.seed + 13);
  for (std::uint64_t k = 0; k < 3; ++k) {
    const ModelPath o = simulate_path(flat, cfg.seed + 14, k);
    const SmootherOutput s = bayes_smoother(flat, o.x2, t_index, cfg.seed + 15 + k, m);
    const double ref = fk.mean(t_index, 0);
    const double w = std::abs(s.psi - ref) / (3.0 * std::hypot(s.standard_error, fk.standard_error(t_index, 0)));
    worst = std::max(worst, w);
    detail += " uninformative " + std::to_string(k) + ": " + fmt(s.psi) + " vs " + fmt(ref) + ";";
  }
  finish(r, worst, tolerance(cfg, "bayes_smoother", 1.0), detail + " measured = worst error / combined 3 SE bar");
  return r;
}

CheckRecord spde_consistency(const CheckConfig& cfg) {
  CheckRecord r;
  const int n = 8;
  const TimeGrid g(1.0, n);
  const SmoothingModel model{build_covariance(g, CrossCovarianceSpec::scalar(0.5)), DriftSpec::preset("tanh", 0.3),
                             TestFunction::gaussian(1.0), RGrid{-8.0, 8.0, 33}};
  validate(model);
  ConsistencyOptions opt;
  opt.spde.seed = cfg.seed + 16;
  opt.mc_samples = full(cfg) ? 100000 : 20000;
  opt.smoother_samples = full(cfg) ? 20000 : 10000;
  opt.paths = full(cfg) ? 20 : 5;
  const ConsistencyReport rep = consistency_check(model, n, opt);

  // Diagnostic: the same field evaluated on the time-reversed observation increments.
  const SpdeField u = solve_spde(model, opt.spde);
  const int r0 = model.r_grid.nearest(opt.r_query);
  const double f0 = model.f(opt.r_query);
  std::vector<double> reversed;
  for (int k = 0; k < opt.paths; ++k) {
    const ModelPath obs = simulate_path(model, opt.spde.seed + 202, static_cast<std::uint64_t>(k));
    const Vector xi2 = observation_coordinates(obs.x2, g.dt()).reverse();
    reversed.push_back(u.evaluate_at(n, r0, xi2) * f0 / evaluate(u.U[0][static_cast<std::size_t>(r0)], xi2));
  }

  double worst = 0.0, rms_fwd = 0.0, rms_rev = 0.0;
  Table t{"consistency", {"item", "measured", "reference", "tolerance", "reversed"}, {}};
  int failed = 0, pathwise = 0;
  for (std::size_t i = 0; i < rep.items.size(); ++i) {
    const auto& it = rep.items[i];
    worst = std::max(worst, std::abs(it.measured - it.reference) / it.tolerance);
    failed += it.passed() ? 0 : 1;
    double rev = std::nan("");
    if (it.name.rfind("pathwise_", 0) == 0) {
      rev = reversed[static_cast<std::size_t>(pathwise++)];
      rms_fwd += std::pow(it.measured - it.reference, 2);
      rms_rev += std::pow(rev - it.reference, 2);
    }
    t.rows.push_back({static_cast<double>(i), it.measured, it.reference, it.tolerance, rev});
  }
  r.tables.push_back(std::move(t));
  const double np = std::max(1, pathwise);
  finish(r, worst, 1.0,
         "a1 = 0.3 tanh, a2 = 0, V = 0.5 I, n = 8, K = 4; " + std::to_string(rep.items.size()) + " items, " +
             std::to_string(failed) + " outside their error bars; pathwise rms " + fmt(std::sqrt(rms_fwd / np)) +
             ", on reversed increments " + fmt(std::sqrt(rms_rev / np)));
  return r;
}

CheckRecord kolmogorov(const CheckConfig& cfg) {
  CheckRecord r;
  KolmogorovOptions opt;
  opt.paths = full(cfg) ? 20000 : 5000;
  opt.seed = cfg.seed + 17;
  double worst = 0.0;
  std::string detail;
  Table t{"kolmogorov_residuals", {"preset", "r", "s", "residual", "tolerance"}, {}};
  int pi = 0;
  for (const char* name : {"brownian", "ornstein_uhlenbeck", "transport"}) {
    const KolmogorovReport rep = kolmogorov_check(KolmogorovProblem::preset(name), opt);
    worst = std::max(worst, rep.worst_ratio);
    detail += std::string(" ") + name + " " + fmt(rep.worst_ratio) + ";";
    for (const auto& p : rep.points) t.rows.push_back({static_cast<double>(pi), p.r, p.s, p.residual, p.tolerance});
    ++pi;
  }
  r.tables.push_back(std::move(t));
  finish(r, worst, 1.0, "worst |residual| / tolerance per preset:" + detail);
  return r;
}

using CheckFn = CheckRecord (*)(const CheckConfig&);

const std::vector<CheckFn>& functions() {
  static const std::vector<CheckFn> f = {chaos_norm,          second_quantization_exp, conditional_representation,
                                         gsro_commutation,    extended_equals_ito,     fbm_covariance,
                                         integrator_constant, density_correctness,     quasi_nilpotence,
                                         calculus_identities, smoothing_spde,          bayes_smoother_check,
                                         spde_consistency,    kolmogorov};
  return f;
}

}  // namespace

const std::vector<CheckInfo>& catalog() {
  static const std::vector<CheckInfo> c = {
      {1, "chaos_norm", "chaos-isometry", "chaos", "Chaos norm equals the variance"},
      {2, "second_quantization_exp", "second-quantization-exponential", "chaos",
       "Second quantization of exponential vectors"},
      {3, "conditional_representation", "second-quantization-conditional", "chaos",
       "Second quantization as a conditional expectation"},
      {4, "gsro_commutation", "gsro-commutation", "gsro", "Second quantization commutes with GSRO action"},
      {5, "extended_equals_ito", "extended-integral-ito", "gsro", "Extended integral equals Ito on adapted integrands"},
      {6, "fbm_covariance", "fbm-covariance", "gsro", "Fractional Brownian motion covariance"},
      {7, "integrator_constant", "integrator-inequality", "gsro", "Integrator constant of transported Brownian motion"},
      {8, "density_correctness", "girsanov-density", "density", "Anticipating Girsanov density"},
      {9, "quasi_nilpotence", "carleman-fredholm", "density", "Carleman-Fredholm determinant and quasi-nilpotence"},
      {10, "calculus_identities", "extended-integral-identities", "chaos", "Product and commutation identities"},
      {11, "smoothing_spde", "smoothing-spde", "smoothing", "Smoothing SPDE against Feynman-Kac"},
      {12, "bayes_smoother", "bayes-smoother", "smoothing", "Bayes smoother against tube conditioning"},
      {13, "spde_consistency", "spde-smoother-consistency", "smoothing", "SPDE field against the Bayes smoother"},
      {14, "kolmogorov", "backward-kolmogorov", "smoothing", "Backward Kolmogorov equation residual"},
  };
  return c;
}

std::vector<std::string> suite_names() { return {"all", "chaos", "gsro", "density", "smoothing"}; }

CheckRecord run_check(int number, const CheckConfig& config) {
  if (number < 1 || number > static_cast<int>(catalog().size()))
    throw std::out_of_range("run_check: no check " + std::to_string(number));
  const CheckInfo& info = catalog()[static_cast<std::size_t>(number - 1)];
  const auto start = std::chrono::steady_clock::now();
  CheckRecord rec;
  try {
    rec = functions()[static_cast<std::size_t>(number - 1)](config);
  } catch (const std::exception& e) {
    rec = CheckRecord{};
    rec.measured = INFINITY;
    rec.passed = false;
    rec.detail = std::string("error: ") + e.what();
  }
  rec.number = number;
  rec.id = info.id;
  rec.anchor = info.anchor;
  rec.title = info.title;
  rec.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<CheckRecord> run_suite(const std::string& suite, const CheckConfig& config) {
  const auto names = suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end())
    throw std::invalid_argument("unknown suite '" + suite + "'");
  std::vector<CheckRecord> out;
  for (const auto& info : catalog())
    if (suite == "all" || info.suite == suite) out.push_back(run_check(info.number, config));
  return out;
}

}  // namespace wiener::checks
