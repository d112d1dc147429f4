#include "wiener/gaussian_space.hpp"

#include "wiener/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wiener {

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps), dt_(0.0) {
  if (steps < 2) throw std::invalid_argument("TimeGrid: steps must be >= 2");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("TimeGrid: horizon must be positive and finite");
  dt_ = horizon / steps;
  if (dt_ * steps != horizon)
    throw std::invalid_argument("TimeGrid: horizon / steps is not exact in double arithmetic");
}

double TimeGrid::time(int i) const {
  if (i < 0 || i > steps_) throw std::out_of_range("TimeGrid::time index");
  return i == steps_ ? horizon_ : i * dt_;
}

CrossCovarianceSpec CrossCovarianceSpec::zero() { return {}; }

CrossCovarianceSpec CrossCovarianceSpec::scalar(double rho) {
  CrossCovarianceSpec s;
  s.kind = Kind::kScalar;
  s.rho = rho;
  return s;
}

CrossCovarianceSpec CrossCovarianceSpec::volterra(Matrix kernel) {
  CrossCovarianceSpec s;
  s.kind = Kind::kVolterra;
  s.kernel = std::move(kernel);
  return s;
}

CrossCovarianceSpec CrossCovarianceSpec::exponential_volterra(const TimeGrid& grid, double rho,
                                                              double lambda) {
  const int n = grid.steps();
  Matrix k = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      k(i, j) = rho * lambda * std::exp(-lambda * (grid.time(i) - grid.time(j)));
  CrossCovarianceSpec s = volterra(std::move(k));
  s.rho = rho;
  return s;
}

std::string CrossCovarianceSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::kZero: os << "zero"; break;
    case Kind::kScalar: os << "scalar(rho=" << rho << ")"; break;
    case Kind::kVolterra: os << "volterra(" << kernel.rows() << "x" << kernel.cols() << ")"; break;
  }
  return os.str();
}

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

namespace {

Matrix cross_operator(const TimeGrid& grid, const CrossCovarianceSpec& spec) {
  const int n = grid.steps();
  switch (spec.kind) {
    case CrossCovarianceSpec::Kind::kZero:
      return Matrix::Zero(n, n);
    case CrossCovarianceSpec::Kind::kScalar:
      return spec.rho * Matrix::Identity(n, n);
    case CrossCovarianceSpec::Kind::kVolterra: {
      if (spec.kernel.rows() != n || spec.kernel.cols() != n)
        throw std::invalid_argument("build_covariance: volterra kernel must be n x n");
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (spec.kernel(i, j) != 0.0)
            throw std::invalid_argument("build_covariance: volterra kernel is not lower-triangular");
      return spec.kernel * grid.dt();
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace

CovModel build_covariance(const TimeGrid& grid, const CrossCovarianceSpec& spec) {
  const int n = grid.steps();
  Matrix V = cross_operator(grid, spec);
  const double vnorm = operator_norm(V);
  if (!(vnorm < 1.0)) {
    std::ostringstream os;
    os << "build_covariance: ||V|| = " << vnorm << " must be < 1";
    throw std::invalid_argument(os.str());
  }

  Matrix S = Matrix::Identity(2 * n, 2 * n);
  S.topRightCorner(n, n) = V;
  S.bottomLeftCorner(n, n) = V.transpose();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
  const Vector lambda = eig.eigenvalues().cwiseMax(1e-14);
  const Matrix& U = eig.eigenvectors();
  Matrix S_half = U * lambda.cwiseSqrt().asDiagonal() * U.transpose();
  Matrix S_inv_half = U * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * U.transpose();
  Matrix S_inv = U * lambda.cwiseInverse().asDiagonal() * U.transpose();
  // Exact symmetry.
  S_half = 0.5 * (S_half + S_half.transpose()).eval();
  S_inv_half = 0.5 * (S_inv_half + S_inv_half.transpose()).eval();
  S_inv = 0.5 * (S_inv + S_inv.transpose()).eval();
  Matrix Q = S_inv - Matrix::Identity(2 * n, 2 * n);

  return CovModel{grid, spec, std::move(V), std::move(S), std::move(S_half),
                  std::move(S_inv_half), std::move(S_inv), std::move(Q)};
}

double prefix_projection_defect(const CovModel& cov) {
  const int n = cov.n();
  double worst = 0.0;
  for (int k = 0; k <= n; ++k) {
    Vector p = Vector::Zero(2 * n);
    p.head(k).setOnes();
    p.segment(n, k).setOnes();
    const Matrix PS = p.asDiagonal() * cov.S;
    const Matrix PSP = PS * p.asDiagonal();
    worst = std::max(worst, operator_norm(PS - PSP));
  }
  return worst;
}

Vector path_from_coordinates(std::span<const double> coords, double dt) {
  Vector path(static_cast<Eigen::Index>(coords.size()) + 1);
  path(0) = 0.0;
  const double s = std::sqrt(dt);
  for (std::size_t k = 0; k < coords.size(); ++k)
    path(static_cast<Eigen::Index>(k) + 1) = path(static_cast<Eigen::Index>(k)) + s * coords[k];
  return path;
}

NoiseSample sample_from_correlated(const CovModel& cov, const Vector& xi) {
  const int n = cov.n();
  NoiseSample s;
  s.xi = xi;
  s.xi_prime = cov.S_inv_half * xi;
  s.w1 = path_from_coordinates(std::span<const double>(xi.data(), n), cov.grid.dt());
  s.w2 = path_from_coordinates(std::span<const double>(xi.data() + n, n), cov.grid.dt());
  return s;
}

NoiseSample sample_from_whitened(const CovModel& cov, const Vector& xi_prime) {
  const int n = cov.n();
  NoiseSample s;
  s.xi_prime = xi_prime;
  s.xi = cov.S_half * xi_prime;
  s.w1 = path_from_coordinates(std::span<const double>(s.xi.data(), n), cov.grid.dt());
  s.w2 = path_from_coordinates(std::span<const double>(s.xi.data() + n, n), cov.grid.dt());
  return s;
}

NoiseSample sample_pair(const CovModel& cov, std::uint64_t seed, std::uint64_t index) {
  CounterRng rng(seed, index);
  Vector z(cov.dim());
  rng.fill_normal(std::span<double>(z.data(), static_cast<std::size_t>(z.size())));
  return sample_from_whitened(cov, z);
}

Matrix w2_coordinate_map(const CovModel& cov) {
  return cov.S_half.bottomRows(cov.n());
}

Matrix conditional_projector(const CovModel& cov) {
  const Matrix R = w2_coordinate_map(cov);
  Matrix P = R.transpose() * R;
  return 0.5 * (P + P.transpose());
}

double exact_integrator_constant(const Matrix& rows, double dt) {
  const Eigen::Index n = rows.rows() - 1;
  Matrix inc(n, rows.cols());
  for (Eigen::Index k = 0; k < n; ++k) inc.row(k) = rows.row(k + 1) - rows.row(k);
  const Matrix gram = inc * inc.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff() / dt;
}

namespace {

Matrix cumulative_rows(const CovModel& cov, int block) {
  const int n = cov.n();
  const double s = std::sqrt(cov.grid.dt());
  Matrix rows = Matrix::Zero(n + 1, 2 * n);
  for (int k = 0; k < n; ++k) rows.row(k + 1) = rows.row(k) + s * cov.S_half.row(block * n + k);
  return rows;
}

}  // namespace

Matrix w1_rows(const CovModel& cov) { return cumulative_rows(cov, 0); }
Matrix w2_rows(const CovModel& cov) { return cumulative_rows(cov, 1); }

IntegratorProcess regress_gamma(const CovModel& cov) {
  const Matrix P = conditional_projector(cov);
  // Second quantization acts on first-chaos rows by c -> P^T c.
  Matrix rows = w1_rows(cov) * P;
  rows.row(0).setZero();
  IntegratorProcess g{cov.grid, std::move(rows), 0.0};
  g.bound_constant = exact_integrator_constant(g.rows, cov.grid.dt());
  return g;
}

}  // namespace wiener
