#include "wiener/smoothing.hpp"

#include "wiener/parallel.hpp"
#include "wiener/rng.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace wiener {

KolmogorovProblem KolmogorovProblem::brownian() {
  KolmogorovProblem p;
  p.name = "brownian";
  p.a = [](double) { return 0.0; };
  p.b = [](double) { return 1.0; };
  p.f = TestFunction::gaussian(0.75);
  return p;
}

KolmogorovProblem KolmogorovProblem::ornstein_uhlenbeck() {
  KolmogorovProblem p;
  p.name = "ornstein_uhlenbeck";
  p.a = [](double r) { return -r; };
  p.b = [](double) { return 1.0; };
  p.f = TestFunction::identity();
  return p;
}

KolmogorovProblem KolmogorovProblem::transport() {
  KolmogorovProblem p;
  p.name = "transport";
  p.a = [](double r) { return std::sin(r); };
  p.b = [](double) { return 0.0; };
  p.f = TestFunction::gaussian(1.0);
  return p;
}

KolmogorovProblem KolmogorovProblem::preset(const std::string& name) {
  if (name == "brownian") return brownian();
  if (name == "ornstein_uhlenbeck" || name == "ou") return ornstein_uhlenbeck();
  if (name == "transport") return transport();
  throw std::invalid_argument("unknown kolmogorov preset '" + name + "'");
}

namespace {

// Euler terminal values for every (r, s) start, using `stride` fine increments per step.
void terminal_values(const KolmogorovProblem& pb, const std::vector<double>& dw, double fine_dt, int stride,
                     int s_stride, Matrix& Y) {
  const int R = pb.r_grid.points;
  const int steps = static_cast<int>(dw.size());
  const double h = fine_dt * stride;
  for (int j = 0; j < pb.s_points; ++j) {
    for (int i = 0; i < R; ++i) {
      double x = pb.r_grid.r(i);
      for (int k = j * s_stride; k < steps; k += stride) {
        double inc = 0.0;
        for (int q = 0; q < stride; ++q) inc += dw[static_cast<std::size_t>(k + q)];
        x += pb.a(x) * h + pb.b(x) * inc;
      }
      Y(i, j) = pb.f(x);
    }
  }
}

double stencil(const KolmogorovProblem& pb, const Matrix& Y, int i, int j, int w, double dr, double ds) {
  const double r = pb.r_grid.r(i);
  const double b = pb.b(r);
  const double hs = w * ds, hr = w * dr;
  const double dsY = (Y(i, j + w) - Y(i, j - w)) / (2.0 * hs);
  const double drY = (Y(i + w, j) - Y(i - w, j)) / (2.0 * hr);
  const double drrY = (Y(i + w, j) - 2.0 * Y(i, j) + Y(i - w, j)) / (hr * hr);
  return -dsY - 0.5 * b * b * drrY - pb.a(r) * drY;
}

}  // namespace

KolmogorovReport kolmogorov_check(const KolmogorovProblem& pb, const KolmogorovOptions& opt) {
  const int R = pb.r_grid.points;
  const int S = pb.s_points;
  if (R < 5 || S < 5) throw std::invalid_argument("kolmogorov_check: need at least 5 r and 5 s points");
  const double ds = pb.horizon / (2.0 * (S - 1));
  const double fine_dt = pb.horizon / opt.steps;
  const double ratio = ds / fine_dt;
  const int s_stride = static_cast<int>(std::lround(ratio));
  if (std::abs(ratio - s_stride) > 1e-9 || s_stride % 2 != 0)
    throw std::invalid_argument("kolmogorov_check: s spacing must be an even number of Euler steps");
  const double dr = pb.r_grid.dr();

  std::vector<std::pair<int, int>> interior;
  for (int i = 2; i + 2 < R; ++i)
    for (int j = 2; j + 2 < S; ++j) interior.emplace_back(i, j);
  const auto P = static_cast<Eigen::Index>(interior.size());

  const ChunkPlan plan = plan_chunks(opt.paths, 256);
  struct Partial {
    Matrix phi;
    Vector s1, s2, s1_wide, s1_coarse;
  };
  std::vector<Partial> parts(plan.chunks());
  parallel_chunks(plan.chunks(), [&](std::size_t c) {
    Partial& part = parts[c];
    part.phi = Matrix::Zero(R, S);
    part.s1 = part.s2 = part.s1_wide = part.s1_coarse = Vector::Zero(P);
    std::vector<double> dw(static_cast<std::size_t>(opt.steps));
    Matrix Y(R, S), Yc(R, S);
    const double sd = std::sqrt(fine_dt);
    for (std::size_t p = plan.begin(c); p < plan.end(c); ++p) {
      CounterRng rng(opt.seed, p);
      for (auto& x : dw) x = sd * rng.normal();
      terminal_values(pb, dw, fine_dt, 1, s_stride, Y);
      terminal_values(pb, dw, fine_dt, 2, s_stride, Yc);
      part.phi += Y;
      for (Eigen::Index q = 0; q < P; ++q) {
        const auto [i, j] = interior[static_cast<std::size_t>(q)];
        const double res = stencil(pb, Y, i, j, 1, dr, ds);
        part.s1(q) += res;
        part.s2(q) += res * res;
        part.s1_wide(q) += stencil(pb, Y, i, j, 2, dr, ds);
        part.s1_coarse(q) += stencil(pb, Yc, i, j, 1, dr, ds);
      }
    }
  });

  Matrix phi = Matrix::Zero(R, S);
  Vector s1 = Vector::Zero(P), s2 = Vector::Zero(P), sw = Vector::Zero(P), sc = Vector::Zero(P);
  for (const auto& part : parts) {
    phi += part.phi;
    s1 += part.s1;
    s2 += part.s2;
    sw += part.s1_wide;
    sc += part.s1_coarse;
  }
  const double m = static_cast<double>(opt.paths);
  KolmogorovReport rep;
  rep.name = pb.name;
  rep.phi = phi / m;
  for (Eigen::Index q = 0; q < P; ++q) {
    const auto [i, j] = interior[static_cast<std::size_t>(q)];
    KolmogorovPoint pt;
    pt.r = pb.r_grid.r(i);
    pt.s = j * ds;
    pt.residual = s1(q) / m;
    const double var = std::max(0.0, s2(q) / m - pt.residual * pt.residual) * m / std::max(1.0, m - 1.0);
    pt.standard_error = std::sqrt(var / m);
    pt.truncation = std::abs(pt.residual - sw(q) / m);
    pt.euler_bias = std::abs(pt.residual - sc(q) / m);
    pt.tolerance = 4.0 * pt.standard_error + pt.truncation + pt.euler_bias + 1e-12;
    rep.worst_ratio = std::max(rep.worst_ratio, std::abs(pt.residual) / pt.tolerance);
    rep.points.push_back(pt);
  }
  return rep;
}

// ---- consistency ------------------------------------------------------------------------

bool ConsistencyReport::passed() const {
  for (const auto& it : items)
    if (!it.passed()) return false;
  return !items.empty();
}

ConsistencyReport consistency_check(const SmoothingModel& model, int t_index, const ConsistencyOptions& opt) {
  const CovModel& cov = model.cov;
  const int n = cov.n();
  if (t_index < 0 || t_index > n) throw std::invalid_argument("consistency_check: t_index out of range");
  const double dt = cov.grid.dt();
  const double rq = opt.r_query;
  const int rq_index = model.r_grid.nearest(rq);
  if (std::abs(model.r_grid.r(rq_index) - rq) > 1e-12)
    throw std::invalid_argument("consistency_check: r_query must be an r-grid point");

  // Base solve and a refined solve (half dr, four times the sub-steps) for the scheme error.
  const SpdeField base = solve_spde(model, opt.spde);
  SmoothingModel fine_model = model;
  fine_model.r_grid.points = 2 * model.r_grid.points - 1;
  SpdeOptions fine_opt = opt.spde;
  fine_opt.substeps *= 4;
  const SpdeField fine = solve_spde(fine_model, fine_opt);
  const int rq_fine = fine_model.r_grid.nearest(rq);
  const ChaosVector& u = base.U[static_cast<std::size_t>(t_index)][static_cast<std::size_t>(rq_index)];
  const ChaosVector& uf = fine.U[static_cast<std::size_t>(t_index)][static_cast<std::size_t>(rq_fine)];
  const ChaosVector& mass = base.U[0][static_cast<std::size_t>(rq_index)];
  const double f0 = model.f(rq);

  // Unconditional Monte Carlo of f(r + x1(t)) and f(r + x1(t)) x2(T).
  const ChunkPlan plan = plan_chunks(opt.mc_samples, 2048);
  std::vector<std::array<double, 4>> parts(plan.chunks(), {0.0, 0.0, 0.0, 0.0});
  parallel_chunks(plan.chunks(), [&](std::size_t c) {
    auto& a = parts[c];
    for (std::size_t k = plan.begin(c); k < plan.end(c); ++k) {
      const ModelPath p = simulate_path(model, opt.spde.seed + 101, k);
      const double y = model.f(rq + p.x1(t_index));
      const double z = y * p.x2(n);
      a[0] += y;
      a[1] += y * y;
      a[2] += z;
      a[3] += z * z;
    }
  });
  std::array<double, 4> s{0.0, 0.0, 0.0, 0.0};
  for (const auto& a : parts)
    for (int q = 0; q < 4; ++q) s[static_cast<std::size_t>(q)] += a[static_cast<std::size_t>(q)];
  const double m = static_cast<double>(opt.mc_samples);
  const double mean_y = s[0] / m, mean_z = s[2] / m;
  const double se_y = std::sqrt(std::max(0.0, s[1] / m - mean_y * mean_y) / m);
  const double se_z = std::sqrt(std::max(0.0, s[3] / m - mean_z * mean_z) / m);

  ConsistencyReport rep;
  {
    const double disc = std::abs(u.mean() - uf.mean());
    rep.items.push_back({"mean", u.mean(), mean_y, 4.0 * std::hypot(se_y, disc)});
  }
  {
    const double sdt = std::sqrt(dt);
    double cross = 0.0, cross_f = 0.0;
    if (u.max_degree() >= 1)
      for (int i = 0; i < n; ++i) {
        cross += sdt * u.degree(1)[static_cast<std::size_t>(i)];
        cross_f += sdt * uf.degree(1)[static_cast<std::size_t>(i)];
      }
    const double disc = std::abs(cross - cross_f);
    rep.items.push_back({"cross_moment_w2", cross, mean_z, 4.0 * std::hypot(se_z, disc)});
  }

  // Pathwise: normalized U against the Bayes smoother on observed paths.
  SmoothingModel shifted = model;
  shifted.f.value = [f = model.f.value, rq](double r) { return f(rq + r); };
  const ChaosVector u_low = u.with_capacity(std::max(0, u.max_degree() - 1));
  for (int k = 0; k < opt.paths; ++k) {
    const ModelPath obs = simulate_path(model, opt.spde.seed + 202, static_cast<std::uint64_t>(k));
    const Vector xi2 = observation_coordinates(obs.x2, dt);
    const double norm = f0 != 0.0 ? evaluate(mass, xi2) / f0 : 1.0;
    const double measured = evaluate(u, xi2) / norm;
    const SmootherOutput sm =
        bayes_smoother(shifted, obs.x2, t_index, opt.spde.seed + 303 + static_cast<std::uint64_t>(k), opt.smoother_samples);
    const double disc = std::abs(measured - evaluate(uf, xi2) / norm);
    const double trunc = std::abs(measured - evaluate(u_low, xi2) / norm);
    const double bar = std::sqrt(sm.standard_error * sm.standard_error + disc * disc + trunc * trunc);
    rep.items.push_back({"pathwise_" + std::to_string(k), measured, sm.psi, 4.0 * bar});
  }
  return rep;
}

}  // namespace wiener
