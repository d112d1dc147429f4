#include "wiener/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wiener {

namespace {

constexpr std::size_t kMaxFullEntries = std::size_t{1} << 25;

std::size_t ipow(int d, int k) {
  std::size_t r = 1;
  for (int j = 0; j < k; ++j) {
    r *= static_cast<std::size_t>(d);
    if (r > kMaxFullEntries) throw std::length_error("chaos: full tensor too large for this operation");
  }
  return r;
}

// Adds scale * symmetrization of a full degree-k tensor into compressed coefficients.
void add_symmetrized(int dim, int k, const double* full, double scale, std::span<double> out) {
  const auto table = MultiIndexTable::get(dim, k);
  const std::size_t total = ipow(dim, k);
  std::vector<double> acc(table->size(), 0.0);
  std::vector<int> idx(static_cast<std::size_t>(k), 0);
  std::vector<int> sorted(static_cast<std::size_t>(k));
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::copy(idx.begin(), idx.end(), sorted.begin());
    std::sort(sorted.begin(), sorted.end());
    acc[table->rank(sorted)] += full[lin];
    for (int j = 0; j < k; ++j) {
      if (++idx[static_cast<std::size_t>(j)] < dim) break;
      idx[static_cast<std::size_t>(j)] = 0;
    }
  }
  for (std::size_t pos = 0; pos < acc.size(); ++pos) out[pos] += scale * acc[pos] / table->multiplicity(pos);
}

double degree_norm_sq(const MultiIndexTable& t, std::span<const double> c, int k) {
  double s = 0.0;
  for (std::size_t pos = 0; pos < t.size(); ++pos) s += t.multiplicity(pos) * c[pos] * c[pos];
  return factorial(k) * s;
}

void record_drop(TruncationReport* report, const ChaosVector& v, int k) {
  if (!report) return;
  const double nsq = degree_norm_sq(v.table(k), v.degree(k), k);
  if (nsq > 0.0) {
    report->dropped_norm_sq += nsq;
    report->highest_dropped_degree = std::max(report->highest_dropped_degree, k);
  }
}

// Symmetrized tensor product of a degree-i and a degree-j kernel, added into out (degree i + j).
void add_sym_tensor_product(const ChaosVector& a, int i, const ChaosVector& b, int j, double scale,
                            ChaosVector& out) {
  const int N = i + j;
  const auto& tn = out.table(N);
  const auto& ta = a.table(i);
  const auto& tb = b.table(j);
  const auto ca = a.degree(i);
  const auto cb = b.degree(j);
  const auto zero = [](std::span<const double> c) { return std::all_of(c.begin(), c.end(), [](double x) { return x == 0.0; }); };
  if (zero(ca) || zero(cb)) return;
  auto co = out.degree(N);
  const double inv_binom = 1.0 / static_cast<double>(binomial(N, i));
  std::vector<int> left(static_cast<std::size_t>(i)), right(static_cast<std::size_t>(j));
  for (std::size_t pos = 0; pos < tn.size(); ++pos) {
    const auto J = tn.index(pos);
    double s = 0.0;
    // Subsets of positions of size i, enumerated as bitmasks.
    for (std::uint32_t mask = 0; mask < (1u << N); ++mask) {
      if (__builtin_popcount(mask) != i) continue;
      int li = 0, ri = 0;
      for (int p = 0; p < N; ++p) {
        if (mask & (1u << p)) left[static_cast<std::size_t>(li++)] = J[static_cast<std::size_t>(p)];
        else right[static_cast<std::size_t>(ri++)] = J[static_cast<std::size_t>(p)];
      }
      s += ca[ta.rank(left)] * cb[tb.rank(right)];
    }
    co[pos] += scale * inv_binom * s;
  }
}

int resolve_capacity(int capacity, int fallback) { return capacity < 0 ? fallback : capacity; }

}  // namespace

VectorChaos derivative(const ChaosVector& v) {
  const int d = v.dim();
  const int K = v.max_degree();
  VectorChaos out(d, d, std::max(0, K - 1), v.basis());
  std::vector<int> buf;
  for (int k = 1; k <= K; ++k) {
    const auto& tk = v.table(k);
    const auto ck = v.degree(k);
    const auto& tl = out[0].table(k - 1);
    buf.resize(static_cast<std::size_t>(k));
    for (std::size_t pos = 0; pos < tl.size(); ++pos) {
      const auto I = tl.index(pos);
      for (int h = 0; h < d; ++h) {
        // sorted insertion of h into I
        std::size_t w = 0;
        bool placed = false;
        for (int x : I) {
          if (!placed && h <= x) {
            buf[w++] = h;
            placed = true;
          }
          buf[w++] = x;
        }
        if (!placed) buf[w++] = h;
        out[h].degree(k - 1)[pos] = k * ck[tk.rank(buf)];
      }
    }
  }
  return out;
}

ChaosVector divergence(const VectorChaos& x, int capacity, TruncationReport* report) {
  if (x.size() == 0) throw std::invalid_argument("divergence: empty process");
  const int d = x[0].dim();
  if (x.size() != d) throw std::invalid_argument("divergence: H dimension must equal the noise dimension");
  const Basis basis = x[0].basis();
  if (basis == Basis::kCorrelated)
    throw std::invalid_argument("divergence: needs orthonormal coordinates (whitened or observation)");
  int K = 0;
  for (const auto& c : x.components) {
    if (c.dim() != d || c.basis() != basis) throw std::invalid_argument("divergence: inconsistent components");
    K = std::max(K, c.max_degree());
  }
  const int cap = resolve_capacity(capacity, K + 1);
  ChaosVector out(d, cap, basis);
  ChaosVector dropped(d, K + 1, basis);
  std::vector<int> rest;
  for (int k = 0; k <= K; ++k) {
    const int N = k + 1;
    ChaosVector& target = N <= cap ? out : dropped;
    if (N > cap && !report) continue;
    const auto& tn = target.table(N);
    auto co = target.degree(N);
    rest.resize(static_cast<std::size_t>(k));
    for (std::size_t pos = 0; pos < tn.size(); ++pos) {
      const auto J = tn.index(pos);
      double s = 0.0;
      double term = 0.0;
      for (int p = 0; p < N; ++p) {
        // A repeated value gives the same component and remainder as the previous position.
        if (p == 0 || J[static_cast<std::size_t>(p)] != J[static_cast<std::size_t>(p - 1)]) {
          std::size_t w = 0;
          for (int q = 0; q < N; ++q)
            if (q != p) rest[w++] = J[static_cast<std::size_t>(q)];
          const ChaosVector& comp = x[J[static_cast<std::size_t>(p)]];
          term = k <= comp.max_degree() ? comp.degree(k)[comp.table(k).rank(rest)] : 0.0;
        }
        s += term;
      }
      co[pos] = s / N;
    }
    if (N > cap) record_drop(report, dropped, N);
  }
  return out;
}

ChaosVector wick_product(const ChaosVector& a, const ChaosVector& b, int capacity,
                         TruncationReport* report) {
  if (a.dim() != b.dim() || a.basis() != b.basis())
    throw std::invalid_argument("wick_product: incompatible operands");
  const int cap = resolve_capacity(capacity, std::max(a.max_degree(), b.max_degree()));
  const int top = a.max_degree() + b.max_degree();
  ChaosVector out(a.dim(), std::max(cap, report ? top : cap), a.basis());
  for (int i = 0; i <= a.max_degree(); ++i)
    for (int j = 0; j <= b.max_degree(); ++j) {
      if (i + j > cap && !report) continue;
      add_sym_tensor_product(a, i, b, j, 1.0, out);
    }
  for (int N = cap + 1; N <= out.max_degree(); ++N) record_drop(report, out, N);
  return out.with_capacity(cap);
}

ChaosVector product(const ChaosVector& a, const ChaosVector& b, int capacity, TruncationReport* report) {
  if (a.dim() != b.dim() || a.basis() != b.basis())
    throw std::invalid_argument("product: incompatible operands");
  if (a.basis() == Basis::kCorrelated)
    throw std::invalid_argument("product: needs orthonormal coordinates (whitened or observation)");
  const int d = a.dim();
  const int cap = resolve_capacity(capacity, std::max(a.max_degree(), b.max_degree()));
  const int top = a.max_degree() + b.max_degree();
  ChaosVector out(d, std::max(cap, report ? top : cap), a.basis());
  const auto zero = [](std::span<const double> c) { return std::all_of(c.begin(), c.end(), [](double x) { return x == 0.0; }); };
  for (int p = 0; p <= a.max_degree(); ++p) {
    if (zero(a.degree(p))) continue;
    for (int q = 0; q <= b.max_degree(); ++q) {
      if (zero(b.degree(q))) continue;
      if (p + q <= cap || report) add_sym_tensor_product(a, p, b, q, 1.0, out);
      const int rmax = std::min(p, q);
      if (rmax == 0) continue;
      const std::vector<double> F = a.to_full(p);
      const std::vector<double> G = b.to_full(q);
      for (int r = 1; r <= rmax; ++r) {
        const int N = p + q - 2 * r;
        if (N > cap && !report) continue;
        const std::size_t rows = ipow(d, p - r), mid = ipow(d, r), cols = ipow(d, q - r);
        Eigen::Map<const Matrix> Fm(F.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(mid));
        Eigen::Map<const Matrix> Gm(G.data(), static_cast<Eigen::Index>(mid), static_cast<Eigen::Index>(cols));
        const Matrix C = Fm * Gm;
        const double w = factorial(r) * static_cast<double>(binomial(p, r)) * static_cast<double>(binomial(q, r));
        add_symmetrized(d, N, C.data(), w, out.degree(N));
      }
    }
  }
  for (int N = cap + 1; N <= out.max_degree(); ++N) record_drop(report, out, N);
  return out.with_capacity(cap);
}

ChaosVector pair(const VectorChaos& x, const Vector& h) {
  if (x.size() != h.size()) throw std::invalid_argument("pair: dimension mismatch");
  if (x.size() == 0) throw std::invalid_argument("pair: empty process");
  ChaosVector out(x[0].dim(), x[0].max_degree(), x[0].basis());
  for (int j = 0; j < x.size(); ++j)
    if (h(j) != 0.0) out.add_scaled(x[j], h(j));
  return out;
}

VectorChaos directional_derivative(const VectorChaos& x, const Vector& h) {
  VectorChaos out;
  out.components.reserve(x.components.size());
  for (const auto& c : x.components) out.components.push_back(pair(derivative(c), h));
  return out;
}

VectorChaos multiply(const ChaosVector& alpha, const VectorChaos& x, int capacity, TruncationReport* report) {
  VectorChaos out;
  out.components.reserve(x.components.size());
  for (const auto& c : x.components) out.components.push_back(product(alpha, c, capacity, report));
  return out;
}

ChaosVector substitute(const ChaosVector& v, const Matrix& M, Basis out_basis) {
  if (M.rows() != v.dim()) throw std::invalid_argument("substitute: matrix rows must equal dim");
  const int din = v.dim();
  const int dout = static_cast<int>(M.cols());
  ChaosVector out(dout, v.max_degree(), out_basis);
  out.degree(0)[0] = v.degree(0)[0];
  const Matrix Mt = M.transpose();
  for (int k = 1; k <= v.max_degree(); ++k) {
    std::vector<double> full = v.to_full(k);
    // Mode products one axis at a time; each step rotates the transformed axis to the back.
    std::size_t rest = full.size() / static_cast<std::size_t>(din);
    std::size_t first = static_cast<std::size_t>(din);
    for (int step = 0; step < k; ++step) {
      Eigen::Map<const Matrix> T(full.data(), static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(rest));
      const Matrix R = (Mt * T).transpose();
      if (static_cast<std::size_t>(R.size()) > kMaxFullEntries)
        throw std::length_error("substitute: full tensor too large");
      full.assign(R.data(), R.data() + R.size());
      first = static_cast<std::size_t>(din);
      rest = full.size() / first;
    }
    const auto& table = out.table(k);
    auto co = out.degree(k);
    for (std::size_t pos = 0; pos < table.size(); ++pos) {
      const auto J = table.index(pos);
      std::size_t lin = 0;
      for (int j = k - 1; j >= 0; --j) lin = lin * static_cast<std::size_t>(dout) + static_cast<std::size_t>(J[static_cast<std::size_t>(j)]);
      co[pos] = full[lin];
    }
  }
  return out;
}

ChaosVector second_quantization(const Matrix& C, const ChaosVector& v) {
  if (C.rows() != C.cols() || C.rows() != v.dim())
    throw std::invalid_argument("second_quantization: operator must be dim x dim");
  if (operator_norm(C) > 1.0 + 1e-10) throw std::invalid_argument("second_quantization: operator is not a contraction");
  return substitute(v, C, v.basis());
}

VectorChaos second_quantization(const Matrix& C, const VectorChaos& x) {
  if (x.size() > 0 && (C.rows() != C.cols() || C.rows() != x[0].dim()))
    throw std::invalid_argument("second_quantization: operator must be dim x dim");
  if (operator_norm(C) > 1.0 + 1e-10) throw std::invalid_argument("second_quantization: operator is not a contraction");
  VectorChaos out;
  out.components.reserve(x.components.size());
  for (const auto& c : x.components) out.components.push_back(substitute(c, C, c.basis()));
  return out;
}

}  // namespace wiener
