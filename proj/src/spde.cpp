#include "wiener/smoothing.hpp"

#include "wiener/parallel.hpp"
#include "wiener/rng.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wiener {

namespace {

bool vanishes(const ScalarFunction& f) { return f.derivative_bound == 0.0 && f(0.0) == 0.0; }

// Conditional chaos projections E(F_q | w2) in xi2 coordinates for a batch of functionals
// F_q(xi) of the full noise. fn writes the Q values for one draw of xi.
std::vector<ChaosVector> project_conditional(const CovModel& cov, int K, std::size_t samples, std::uint64_t seed,
                                             int Q, const std::function<void(const Vector&, std::span<double>)>& fn) {
  const int n = cov.n();
  const Matrix cond = Matrix::Identity(n, n) - cov.V * cov.V.transpose();
  Eigen::LLT<Matrix> llt(cond);
  if (llt.info() != Eigen::Success) throw std::runtime_error("conditional covariance not positive definite");
  const Matrix L = llt.matrixL();

  ChaosVector proto(n, K, Basis::kObservation);
  std::vector<std::size_t> offsets{0};
  for (int k = 0; k <= K; ++k) offsets.push_back(offsets.back() + proto.table(k).size());
  const std::size_t C = offsets.back();

  const ChunkPlan plan = plan_chunks(samples, 512);
  std::vector<Matrix> parts(plan.chunks());
  parallel_chunks(plan.chunks(), [&](std::size_t c) {
    Matrix acc = Matrix::Zero(static_cast<Eigen::Index>(C), Q);
    Vector z(2 * n), xi(2 * n), feat(static_cast<Eigen::Index>(C));
    std::vector<double> vals(static_cast<std::size_t>(Q));
    for (std::size_t k = plan.begin(c); k < plan.end(c); ++k) {
      CounterRng rng(seed, k);
      rng.fill_normal(std::span<double>(z.data(), static_cast<std::size_t>(2 * n)));
      xi.tail(n) = z.tail(n);
      xi.head(n) = cov.V * z.tail(n) + L * z.head(n);
      fn(xi, vals);
      const auto f = hermite_features(n, K, std::span<const double>(z.data() + n, static_cast<std::size_t>(n)));
      for (int d = 0; d <= K; ++d)
        for (std::size_t p = 0; p < f[static_cast<std::size_t>(d)].size(); ++p)
          feat(static_cast<Eigen::Index>(offsets[static_cast<std::size_t>(d)] + p)) = f[static_cast<std::size_t>(d)][p];
      acc.noalias() += feat * Eigen::Map<const Eigen::RowVectorXd>(vals.data(), Q);
    }
    parts[c] = std::move(acc);
  });
  Matrix total = Matrix::Zero(static_cast<Eigen::Index>(C), Q);
  for (const auto& p : parts) total += p;
  total /= static_cast<double>(samples);

  std::vector<ChaosVector> out(static_cast<std::size_t>(Q), proto);
  for (int q = 0; q < Q; ++q)
    for (int d = 0; d <= K; ++d) {
      auto c = out[static_cast<std::size_t>(q)].degree(d);
      const double kf = factorial(d);
      for (std::size_t p = 0; p < c.size(); ++p)
        c[p] = total(static_cast<Eigen::Index>(offsets[static_cast<std::size_t>(d)] + p), q) / kf;
    }
  return out;
}

}  // namespace

Matrix SpdeField::mean() const {
  Matrix m(static_cast<Eigen::Index>(U.size()), r_grid.points);
  for (std::size_t t = 0; t < U.size(); ++t)
    for (int r = 0; r < r_grid.points; ++r) m(static_cast<Eigen::Index>(t), r) = U[t][static_cast<std::size_t>(r)].mean();
  return m;
}

double SpdeField::evaluate_at(int t_index, int r_index, const Vector& xi2) const {
  return evaluate(U.at(static_cast<std::size_t>(t_index)).at(static_cast<std::size_t>(r_index)), xi2);
}

Vector gamma_increment(const CovModel& cov, int i) {
  return std::sqrt(cov.grid.dt()) * cov.V.row(i).transpose();
}

SpdeField solve_spde(const SmoothingModel& model, const SpdeOptions& opt) {
  const CovModel& cov = model.cov;
  const int n = cov.n();
  const int R = model.r_grid.points;
  const int K = opt.max_degree;
  if (K < 0) throw std::invalid_argument("solve_spde: max_degree must be >= 0");
  if (opt.substeps < 1) throw std::invalid_argument("solve_spde: substeps must be >= 1");
  const double dt = cov.grid.dt();
  const double h = dt / opt.substeps;
  const double dr = model.r_grid.dr();
  if (h > 0.5 * dr * dr) {
    std::ostringstream os;
    os << "solve_spde: explicit step " << h << " exceeds dr^2/2 = " << 0.5 * dr * dr;
    throw std::invalid_argument(os.str());
  }
  const bool a2_zero = vanishes(model.drift.a2);
  const bool drift_zero = model.drift.is_zero() || (a2_zero && vanishes(model.drift.a1));
  if (opt.third == ThirdTerm::kShortcut && !a2_zero)
    throw std::invalid_argument("solve_spde: the a1(r) dU/dr shortcut requires a2 = 0");

  SpdeField field;
  field.grid = cov.grid;
  field.r_grid = model.r_grid;
  field.gamma = regress_gamma(cov);

  // E(p | w2) and, in projected mode, the third term per cell and r.
  ChaosVector initial_mass = ChaosVector::constant(n, K, 1.0, Basis::kObservation);
  std::vector<ChaosVector> third;
  const bool project_mass = !a2_zero && !drift_zero;
  const bool project_third = opt.third == ThirdTerm::kProjected && !drift_zero;
  if (project_mass || project_third) {
    const double sdt = std::sqrt(dt);
    const int Q = 1 + (project_third ? n * R : 0);
    const auto fn = [&](const Vector& xi, std::span<double> out) {
      const NoiseSample s = sample_from_correlated(cov, xi);
      const DensityEval e = density_p(model.drift, s, cov);
      out[0] = e.value;
      if (!project_third) return;
      const DriftJacobian dj = drift_jacobian(model.drift, s, cov);
      const Vector sdp = e.value * (dj.h + cov.S * (dj.Dh.transpose() * (cov.S_inv * (xi - dj.h))));
      for (int i = 0; i < n; ++i)
        for (int r = 0; r < R; ++r)
          out[static_cast<std::size_t>(1 + i * R + r)] = model.f.d1(model.r_grid.r(r) + s.w1(i)) * sdp(i) / sdt;
    };
    auto proj = project_conditional(cov, K, opt.projection_samples, opt.seed, Q, fn);
    if (project_mass) initial_mass = proj[0];
    third.assign(proj.begin() + 1, proj.end());
  }

  std::vector<ChaosVector> U;
  U.reserve(static_cast<std::size_t>(R));
  for (int r = 0; r < R; ++r) U.push_back(model.f(model.r_grid.r(r)) * initial_mass);
  field.U.push_back(U);

  const double inv2dr = 1.0 / (2.0 * dr);
  const double invdr2 = 1.0 / (dr * dr);
  for (int i = 0; i < n; ++i) {
    const Vector g = gamma_increment(cov, i) / opt.substeps;
    const bool has_gamma = g.squaredNorm() > 0.0;
    const ChaosVector g_chaos = has_gamma ? ChaosVector::first_chaos(g, std::max(1, K), Basis::kObservation)
                                          : ChaosVector();
    for (int sub = 0; sub < opt.substeps; ++sub) {
      std::vector<ChaosVector> next = U;
      std::vector<TruncationReport> reports(static_cast<std::size_t>(R));
      parallel_chunks(static_cast<std::size_t>(R - 2), [&](std::size_t c) {
        const int r = static_cast<int>(c) + 1;
        const auto ru = static_cast<std::size_t>(r);
        ChaosVector d1 = U[ru + 1] - U[ru - 1];
        d1 *= inv2dr;
        ChaosVector d2 = U[ru + 1] - 2.0 * U[ru] + U[ru - 1];
        d2 *= invdr2;
        ChaosVector& out = next[ru];
        out.add_scaled(d2, 0.5 * h);
        if (has_gamma && K >= 1) {
          TruncationReport* rep = &reports[ru];
          if (opt.increment == IncrementMode::kWick) {
            out += wick_product(d1, g_chaos, K, rep);
          } else {
            ChaosVector term = product(d1, g_chaos, K, rep);
            term -= pair(derivative(d1), g).with_capacity(K);
            out += term;
          }
        }
        if (!drift_zero) {
          if (opt.third == ThirdTerm::kShortcut) {
            out.add_scaled(d1, h * model.drift.a1(model.r_grid.r(r)));
          } else if (opt.third == ThirdTerm::kProjected) {
            out.add_scaled(third[static_cast<std::size_t>(i * R + r)], h);
          }
        }
      });
      for (const auto& rep : reports) field.truncation.merge(rep);
      U = std::move(next);
    }
    field.U.push_back(U);
  }
  return field;
}

}  // namespace wiener
