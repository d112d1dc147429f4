#include "wiener/chaos.hpp"

#include "wiener/parallel.hpp"
#include "wiener/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wiener {

std::string to_string(Basis b) {
  switch (b) {
    case Basis::kWhitened: return "whitened";
    case Basis::kCorrelated: return "correlated";
    case Basis::kObservation: return "observation";
  }
  return "unknown";
}

Basis basis_from_string(const std::string& s) {
  if (s == "whitened") return Basis::kWhitened;
  if (s == "correlated") return Basis::kCorrelated;
  if (s == "observation") return Basis::kObservation;
  throw std::invalid_argument("unknown basis '" + s + "'");
}

ChaosVector::ChaosVector(int dim, int max_degree, Basis basis)
    : dim_(dim), max_degree_(-1), basis_(basis) {
  if (dim < 1) throw std::invalid_argument("ChaosVector: dim must be >= 1");
  if (max_degree < 0) throw std::invalid_argument("ChaosVector: max_degree must be >= 0");
  grow_to(max_degree);
}

void ChaosVector::grow_to(int max_degree) {
  for (int k = max_degree_ + 1; k <= max_degree; ++k) {
    tables_.push_back(MultiIndexTable::get(dim_, k));
    coeffs_.emplace_back(tables_.back()->size(), 0.0);
  }
  if (max_degree > max_degree_) max_degree_ = max_degree;
}

ChaosVector ChaosVector::constant(int dim, int max_degree, double value, Basis basis) {
  ChaosVector v(dim, max_degree, basis);
  v.coeffs_[0][0] = value;
  return v;
}

ChaosVector ChaosVector::first_chaos(const Vector& phi, int max_degree, Basis basis) {
  if (max_degree < 1) throw std::invalid_argument("first_chaos: max_degree must be >= 1");
  ChaosVector v(static_cast<int>(phi.size()), max_degree, basis);
  for (int i = 0; i < v.dim_; ++i) v.coeffs_[1][static_cast<std::size_t>(i)] = phi(i);
  return v;
}

ChaosVector ChaosVector::from_full(int dim, const std::vector<std::vector<double>>& full,
                                   Basis basis, double tol) {
  if (full.empty()) throw std::invalid_argument("from_full: no degrees");
  ChaosVector v(dim, static_cast<int>(full.size()) - 1, basis);
  for (int k = 0; k <= v.max_degree_; ++k) {
    const auto& t = full[static_cast<std::size_t>(k)];
    std::size_t expected = 1;
    for (int j = 0; j < k; ++j) expected *= static_cast<std::size_t>(dim);
    if (t.size() != expected) throw std::invalid_argument("from_full: wrong tensor size");
    std::vector<int> idx(static_cast<std::size_t>(k), 0);
    std::vector<int> sorted(static_cast<std::size_t>(k));
    const auto& table = v.table(k);
    std::vector<char> seen(table.size(), 0);
    for (std::size_t lin = 0; lin < t.size(); ++lin) {
      std::copy(idx.begin(), idx.end(), sorted.begin());
      std::sort(sorted.begin(), sorted.end());
      const std::size_t pos = table.rank(sorted);
      double& slot = v.coeffs_[static_cast<std::size_t>(k)][pos];
      if (!seen[pos]) {
        slot = t[lin];
        seen[pos] = 1;
      } else if (std::abs(slot - t[lin]) > tol * std::max(1.0, std::abs(slot))) {
        throw std::invalid_argument("from_full: tensor of degree " + std::to_string(k) +
                                    " is not symmetric");
      }
      for (int j = 0; j < k; ++j) {
        if (++idx[static_cast<std::size_t>(j)] < dim) break;
        idx[static_cast<std::size_t>(j)] = 0;
      }
    }
  }
  return v;
}

double ChaosVector::coefficient(std::initializer_list<int> idx) const {
  std::vector<int> s(idx);
  std::sort(s.begin(), s.end());
  const int k = static_cast<int>(s.size());
  if (k > max_degree_) return 0.0;
  for (int i : s)
    if (i < 0 || i >= dim_) throw std::out_of_range("coefficient index");
  return coeffs_[static_cast<std::size_t>(k)][table(k).rank(s)];
}

double& ChaosVector::coefficient_ref(std::span<const int> idx) {
  std::vector<int> s(idx.begin(), idx.end());
  std::sort(s.begin(), s.end());
  const int k = static_cast<int>(s.size());
  if (k > max_degree_) throw std::out_of_range("coefficient_ref: degree above capacity");
  for (int i : s)
    if (i < 0 || i >= dim_) throw std::out_of_range("coefficient index");
  return coeffs_[static_cast<std::size_t>(k)][table(k).rank(s)];
}

std::size_t ChaosVector::coefficient_count() const {
  std::size_t n = 0;
  for (const auto& c : coeffs_) n += c.size();
  return n;
}

std::vector<double> ChaosVector::to_full(int k) const {
  std::size_t total = 1;
  for (int j = 0; j < k; ++j) total *= static_cast<std::size_t>(dim_);
  std::vector<double> out(total, 0.0);
  if (k > max_degree_) return out;
  const auto& table = this->table(k);
  const auto& c = coeffs_[static_cast<std::size_t>(k)];
  std::vector<int> idx(static_cast<std::size_t>(k), 0);
  std::vector<int> sorted(static_cast<std::size_t>(k));
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::copy(idx.begin(), idx.end(), sorted.begin());
    std::sort(sorted.begin(), sorted.end());
    out[lin] = c[table.rank(sorted)];
    for (int j = 0; j < k; ++j) {
      if (++idx[static_cast<std::size_t>(j)] < dim_) break;
      idx[static_cast<std::size_t>(j)] = 0;
    }
  }
  return out;
}

ChaosVector ChaosVector::with_capacity(int max_degree) const {
  ChaosVector out(dim_, max_degree, basis_);
  for (int k = 0; k <= std::min(max_degree, max_degree_); ++k)
    out.coeffs_[static_cast<std::size_t>(k)] = coeffs_[static_cast<std::size_t>(k)];
  return out;
}

int ChaosVector::effective_degree(double tol) const {
  for (int k = max_degree_; k >= 0; --k)
    for (double a : coeffs_[static_cast<std::size_t>(k)])
      if (std::abs(a) > tol) return k;
  return -1;
}

void ChaosVector::check_compatible(const ChaosVector& o) const {
  if (dim_ != o.dim_) throw std::invalid_argument("ChaosVector: dimension mismatch");
  if (basis_ != o.basis_) throw std::invalid_argument("ChaosVector: basis mismatch");
}

ChaosVector& ChaosVector::add_scaled(const ChaosVector& o, double s) {
  check_compatible(o);
  grow_to(o.max_degree_);
  for (int k = 0; k <= o.max_degree_; ++k) {
    auto& dst = coeffs_[static_cast<std::size_t>(k)];
    const auto& src = o.coeffs_[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += s * src[i];
  }
  return *this;
}

ChaosVector& ChaosVector::operator+=(const ChaosVector& o) { return add_scaled(o, 1.0); }
ChaosVector& ChaosVector::operator-=(const ChaosVector& o) { return add_scaled(o, -1.0); }

ChaosVector& ChaosVector::operator*=(double s) {
  for (auto& c : coeffs_)
    for (double& a : c) a *= s;
  return *this;
}

VectorChaos::VectorChaos(int h_dim, int noise_dim, int max_degree, Basis basis) {
  components.assign(static_cast<std::size_t>(h_dim), ChaosVector(noise_dim, max_degree, basis));
}

VectorChaos VectorChaos::deterministic(const Vector& phi, int noise_dim, int max_degree,
                                       Basis basis) {
  VectorChaos x(static_cast<int>(phi.size()), noise_dim, max_degree, basis);
  for (int j = 0; j < x.size(); ++j) x[j].degree(0)[0] = phi(j);
  return x;
}

void TruncationReport::merge(const TruncationReport& o) {
  dropped_norm_sq += o.dropped_norm_sq;
  highest_dropped_degree = std::max(highest_dropped_degree, o.highest_dropped_degree);
}

// ---- construction ---------------------------------------------------------------

ChaosVector exp_vector(const Vector& phi, int max_degree, Basis basis) {
  const int d = static_cast<int>(phi.size());
  ChaosVector v(d, max_degree, basis);
  v.degree(0)[0] = 1.0;
  for (int k = 1; k <= max_degree; ++k) {
    const auto& table = v.table(k);
    const double inv_kfact = 1.0 / factorial(k);
    auto coeffs = v.degree(k);
    for (std::size_t pos = 0; pos < table.size(); ++pos) {
      double p = inv_kfact;
      for (int i : table.index(pos)) p *= phi(i);
      coeffs[pos] = p;
    }
  }
  return v;
}

double exp_vector_tail_norm_sq(const Vector& phi, int max_degree) {
  const double x = phi.squaredNorm();
  double term = 1.0;
  double head = 1.0;
  for (int k = 1; k <= max_degree; ++k) {
    term *= x / k;
    head += term;
  }
  return std::max(0.0, std::exp(x) - head);
}

std::vector<std::vector<double>> hermite_features(int dim, int max_degree,
                                                  std::span<const double> z) {
  if (static_cast<int>(z.size()) != dim) throw std::invalid_argument("hermite_features: length");
  // He_m(z_i) for m <= K.
  const int K = max_degree;
  std::vector<double> he(static_cast<std::size_t>(dim * (K + 1)));
  for (int i = 0; i < dim; ++i) {
    double* h = he.data() + static_cast<std::size_t>(i * (K + 1));
    h[0] = 1.0;
    if (K >= 1) h[1] = z[static_cast<std::size_t>(i)];
    for (int m = 2; m <= K; ++m) h[m] = z[static_cast<std::size_t>(i)] * h[m - 1] - (m - 1) * h[m - 2];
  }
  std::vector<std::vector<double>> out(static_cast<std::size_t>(K + 1));
  for (int k = 0; k <= K; ++k) {
    const auto table = MultiIndexTable::get(dim, k);
    auto& f = out[static_cast<std::size_t>(k)];
    f.resize(table->size());
    for (std::size_t pos = 0; pos < table->size(); ++pos) {
      const auto idx = table->index(pos);
      double p = 1.0;
      int j = 0;
      while (j < k) {
        int run = 1;
        while (j + run < k && idx[static_cast<std::size_t>(j + run)] == idx[static_cast<std::size_t>(j)]) ++run;
        p *= he[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)] * (K + 1) + run)];
        j += run;
      }
      f[pos] = p;
    }
  }
  return out;
}

double evaluate(const ChaosVector& v, std::span<const double> z) {
  const auto feats = hermite_features(v.dim(), v.max_degree(), z);
  double sum = 0.0;
  for (int k = 0; k <= v.max_degree(); ++k) {
    const auto& table = v.table(k);
    const auto c = v.degree(k);
    const auto& f = feats[static_cast<std::size_t>(k)];
    for (std::size_t pos = 0; pos < table.size(); ++pos) sum += table.multiplicity(pos) * c[pos] * f[pos];
  }
  return sum;
}

double evaluate(const ChaosVector& v, const Vector& z) {
  return evaluate(v, std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
}

double inner(const ChaosVector& a, const ChaosVector& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("inner: dimension mismatch");
  if (a.basis() != b.basis()) throw std::invalid_argument("inner: basis mismatch");
  double sum = 0.0;
  const int K = std::min(a.max_degree(), b.max_degree());
  for (int k = 0; k <= K; ++k) {
    const auto& table = a.table(k);
    const auto ca = a.degree(k);
    const auto cb = b.degree(k);
    double s = 0.0;
    for (std::size_t pos = 0; pos < table.size(); ++pos) s += table.multiplicity(pos) * ca[pos] * cb[pos];
    sum += factorial(k) * s;
  }
  return sum;
}

double norm_sq(const ChaosVector& v) { return inner(v, v); }

double norm_sq(const VectorChaos& x) {
  double s = 0.0;
  for (const auto& c : x.components) s += norm_sq(c);
  return s;
}

double inner(const VectorChaos& x, const VectorChaos& y) {
  if (x.size() != y.size()) throw std::invalid_argument("inner: H dimension mismatch");
  double s = 0.0;
  for (int j = 0; j < x.size(); ++j) s += inner(x[j], y[j]);
  return s;
}

Expansion expand(const std::function<double(std::span<const double>)>& sampler, int dim,
                 int max_degree, std::size_t samples, std::uint64_t seed, Basis basis) {
  if (samples < 2) throw std::invalid_argument("expand: need at least 2 samples");
  ChaosVector proto(dim, max_degree, basis);
  std::vector<std::size_t> offsets{0};
  for (int k = 0; k <= max_degree; ++k) offsets.push_back(offsets.back() + proto.table(k).size());
  const std::size_t total = offsets.back();

  const ChunkPlan plan = plan_chunks(samples, 1024);
  struct Partial {
    std::vector<double> s1, s2;
    double f1 = 0.0, f2 = 0.0;
  };
  std::vector<Partial> partials(plan.chunks());
  parallel_chunks(plan.chunks(), [&](std::size_t c) {
    Partial& p = partials[c];
    p.s1.assign(total, 0.0);
    p.s2.assign(total, 0.0);
    std::vector<double> z(static_cast<std::size_t>(dim));
    for (std::size_t i = plan.begin(c); i < plan.end(c); ++i) {
      CounterRng rng(seed, i);
      rng.fill_normal(z);
      const double f = sampler(z);
      p.f1 += f;
      p.f2 += f * f;
      const auto feats = hermite_features(dim, max_degree, z);
      for (int k = 0; k <= max_degree; ++k) {
        const auto& fk = feats[static_cast<std::size_t>(k)];
        const std::size_t off = offsets[static_cast<std::size_t>(k)];
        for (std::size_t pos = 0; pos < fk.size(); ++pos) {
          const double y = f * fk[pos];
          p.s1[off + pos] += y;
          p.s2[off + pos] += y * y;
        }
      }
    }
  });
  std::vector<double> s1(total, 0.0), s2(total, 0.0);
  double f1 = 0.0, f2 = 0.0;
  for (const auto& p : partials) {
    for (std::size_t j = 0; j < total; ++j) {
      s1[j] += p.s1[j];
      s2[j] += p.s2[j];
    }
    f1 += p.f1;
    f2 += p.f2;
  }

  const double m = static_cast<double>(samples);
  Expansion out{ChaosVector(dim, max_degree, basis), ChaosVector(dim, max_degree, basis), 0.0, false};
  for (int k = 0; k <= max_degree; ++k) {
    const double kf = factorial(k);
    auto c = out.coefficients.degree(k);
    auto se = out.standard_errors.degree(k);
    const std::size_t off = offsets[static_cast<std::size_t>(k)];
    for (std::size_t pos = 0; pos < c.size(); ++pos) {
      const double mean = s1[off + pos] / m;
      const double var = std::max(0.0, (s2[off + pos] / m - mean * mean) * m / (m - 1.0));
      c[pos] = mean / kf;
      se[pos] = std::sqrt(var / m) / kf;
    }
  }
  const double fmean = f1 / m;
  out.sample_variance = std::max(0.0, (f2 / m - fmean * fmean) * m / (m - 1.0));
  out.degenerate_variance = out.sample_variance <= 1e-14 * std::max(1.0, fmean * fmean);
  return out;
}

// ---- serialization ----------------------------------------------------------------

std::string to_json(const ChaosVector& v) {
  nlohmann::json j;
  j["format"] = "wiener.chaos/1";
  j["dim"] = v.dim();
  j["max_degree"] = v.max_degree();
  j["basis"] = to_string(v.basis());
  nlohmann::json coeffs = nlohmann::json::array();
  for (int k = 0; k <= v.max_degree(); ++k) {
    const auto c = v.degree(k);
    coeffs.push_back(std::vector<double>(c.begin(), c.end()));
  }
  j["coeffs"] = std::move(coeffs);
  return j.dump();
}

ChaosVector chaos_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("format", std::string{}) != "wiener.chaos/1")
    throw std::invalid_argument("chaos_from_json: unknown format");
  ChaosVector v(j.at("dim").get<int>(), j.at("max_degree").get<int>(),
                basis_from_string(j.at("basis").get<std::string>()));
  const auto& coeffs = j.at("coeffs");
  if (static_cast<int>(coeffs.size()) != v.max_degree() + 1)
    throw std::invalid_argument("chaos_from_json: wrong number of degrees");
  for (int k = 0; k <= v.max_degree(); ++k) {
    const auto vals = coeffs[static_cast<std::size_t>(k)].get<std::vector<double>>();
    auto dst = v.degree(k);
    if (vals.size() != dst.size()) throw std::invalid_argument("chaos_from_json: wrong tensor size");
    std::copy(vals.begin(), vals.end(), dst.begin());
  }
  return v;
}

}  // namespace wiener
