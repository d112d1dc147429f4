#pragma once

#include "wiener/gaussian_space.hpp"
#include "wiener/multi_index.hpp"

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace wiener {

/// Which Gaussian coordinates the multilinear forms are written in.
enum class Basis {
  kWhitened,    // xi' : identity covariance, 2n coordinates
  kCorrelated,  // xi  : covariance S
  kObservation  // xi2 : the n normalized increments of w2 (identity covariance)
};

std::string to_string(Basis b);
Basis basis_from_string(const std::string& s);

/// A square-integrable functional truncated to chaos degree <= K:
///   alpha = sum_k A_k(xi, ..., xi),
/// where A_k(xi, ..., xi) is the degree-k multiple Wiener integral (a product of
/// probabilists' Hermite polynomials in the coordinates). Each A_k is a symmetric
/// k-tensor stored once per non-decreasing multi-index.
class ChaosVector {
 public:
  ChaosVector() = default;
  ChaosVector(int dim, int max_degree, Basis basis = Basis::kWhitened);

  static ChaosVector constant(int dim, int max_degree, double value, Basis basis = Basis::kWhitened);
  /// (phi, xi).
  static ChaosVector first_chaos(const Vector& phi, int max_degree, Basis basis = Basis::kWhitened);
  /// Builds from full (dim^k, index 0 fastest) tensors. Throws if any is not symmetric
  /// within `tol`.
  static ChaosVector from_full(int dim, const std::vector<std::vector<double>>& full, Basis basis,
                               double tol = 1e-12);

  int dim() const { return dim_; }
  int max_degree() const { return max_degree_; }
  Basis basis() const { return basis_; }
  const MultiIndexTable& table(int k) const { return *tables_[static_cast<std::size_t>(k)]; }

  std::span<double> degree(int k) { return coeffs_[static_cast<std::size_t>(k)]; }
  std::span<const double> degree(int k) const { return coeffs_[static_cast<std::size_t>(k)]; }

  double mean() const { return coeffs_[0][0]; }
  /// Symmetric entry A_k[i_1, ..., i_k] (indices in any order).
  double coefficient(std::initializer_list<int> idx) const;
  double& coefficient_ref(std::span<const int> idx);
  std::size_t coefficient_count() const;

  /// Full dim^k array of degree k, index 0 fastest.
  std::vector<double> to_full(int k) const;

  /// Same coefficients in a different capacity; dropped mass reported via norm.
  ChaosVector with_capacity(int max_degree) const;
  /// Highest degree with a coefficient whose magnitude exceeds tol (-1 for zero).
  int effective_degree(double tol = 0.0) const;
  void set_basis(Basis b) { basis_ = b; }

  ChaosVector& operator+=(const ChaosVector& o);
  ChaosVector& operator-=(const ChaosVector& o);
  ChaosVector& operator*=(double s);
  /// this += s * o
  ChaosVector& add_scaled(const ChaosVector& o, double s);

  friend ChaosVector operator+(ChaosVector a, const ChaosVector& b) { return a += b; }
  friend ChaosVector operator-(ChaosVector a, const ChaosVector& b) { return a -= b; }
  friend ChaosVector operator*(double s, ChaosVector a) { return a *= s; }

 private:
  void check_compatible(const ChaosVector& o) const;
  void grow_to(int max_degree);

  int dim_ = 0;
  int max_degree_ = -1;
  Basis basis_ = Basis::kWhitened;
  std::vector<std::shared_ptr<const MultiIndexTable>> tables_;
  std::vector<std::vector<double>> coeffs_;
};

/// An H-valued functional: one ChaosVector per coordinate of H.
struct VectorChaos {
  std::vector<ChaosVector> components;

  VectorChaos() = default;
  explicit VectorChaos(std::vector<ChaosVector> c) : components(std::move(c)) {}
  VectorChaos(int h_dim, int noise_dim, int max_degree, Basis basis = Basis::kWhitened);

  /// Deterministic element phi.
  static VectorChaos deterministic(const Vector& phi, int noise_dim, int max_degree,
                                   Basis basis = Basis::kWhitened);

  int size() const { return static_cast<int>(components.size()); }
  ChaosVector& operator[](int i) { return components[static_cast<std::size_t>(i)]; }
  const ChaosVector& operator[](int i) const { return components[static_cast<std::size_t>(i)]; }
};

/// Mass dropped when a degree-raising operation exceeds the output capacity.
struct TruncationReport {
  double dropped_norm_sq = 0.0;
  int highest_dropped_degree = -1;

  bool truncated() const { return highest_dropped_degree >= 0; }
  void merge(const TruncationReport& o);
};

// ---- construction ---------------------------------------------------------------

/// e^{(phi, xi) - |phi|^2 / 2} truncated at degree K: A_k = phi^{(x)k} / k!.
ChaosVector exp_vector(const Vector& phi, int max_degree, Basis basis = Basis::kWhitened);
/// Chaos norm^2 of the discarded tail: sum_{k > K} |phi|^{2k} / k!.
double exp_vector_tail_norm_sq(const Vector& phi, int max_degree);

struct Expansion {
  ChaosVector coefficients;
  ChaosVector standard_errors;
  double sample_variance = 0.0;
  bool degenerate_variance = false;
};

/// Monte-Carlo Hermite projection A_k = E[F H_k(z)] / k! for a functional of a standard
/// Gaussian vector z of length dim. Draw i uses CounterRng(seed, i).
Expansion expand(const std::function<double(std::span<const double>)>& sampler, int dim,
                 int max_degree, std::size_t samples, std::uint64_t seed,
                 Basis basis = Basis::kWhitened);

// ---- evaluation and norms -------------------------------------------------------

/// Hermite features of z laid out like the coefficients of a ChaosVector
/// (one block per degree, products of He_{m}(z_i) over each multi-index).
std::vector<std::vector<double>> hermite_features(int dim, int max_degree, std::span<const double> z);

double evaluate(const ChaosVector& v, std::span<const double> z);
double evaluate(const ChaosVector& v, const Vector& z);

/// E alpha^2 = sum_k k! |A_k|^2.
double norm_sq(const ChaosVector& v);
double norm_sq(const VectorChaos& x);
/// E[alpha beta].
double inner(const ChaosVector& a, const ChaosVector& b);
double inner(const VectorChaos& x, const VectorChaos& y);

// ---- calculus ----------------------------------------------------------------

/// Malliavin derivative: component h has degree-(k-1) coefficients k A_k(e_h, ...).
VectorChaos derivative(const ChaosVector& v);
/// Skorokhod divergence: degree k+1 output is the full symmetrization of the
/// degree-k H-valued kernels. capacity < 0 means input capacity + 1.
ChaosVector divergence(const VectorChaos& x, int capacity = -1, TruncationReport* report = nullptr);
/// Wick product. capacity < 0 means max of the input capacities.
ChaosVector wick_product(const ChaosVector& a, const ChaosVector& b, int capacity = -1,
                         TruncationReport* report = nullptr);
/// Ordinary pointwise product, via the contraction formula for multiple integrals.
ChaosVector product(const ChaosVector& a, const ChaosVector& b, int capacity = -1,
                    TruncationReport* report = nullptr);

/// sum_j h_j x_j.
ChaosVector pair(const VectorChaos& x, const Vector& h);
/// Componentwise (D x_j, h).
VectorChaos directional_derivative(const VectorChaos& x, const Vector& h);
/// Multiplies each component by a scalar functional (pointwise product).
VectorChaos multiply(const ChaosVector& alpha, const VectorChaos& x, int capacity = -1,
                     TruncationReport* report = nullptr);

// ---- linear substitutions ---------------------------------------------------------

/// Replaces the coordinates: A'_{j_1..j_k} = sum_i A_{i_1..i_k} M_{i_1 j_1} ... M_{i_k j_k},
/// i.e. A_k(z,..,z) becomes A_k(Mz,..,Mz). M is dim_in x dim_out.
ChaosVector substitute(const ChaosVector& v, const Matrix& M, Basis out_basis);
/// Second quantization Gamma(C) for a contraction C (||C|| <= 1 + 1e-10).
ChaosVector second_quantization(const Matrix& C, const ChaosVector& v);
VectorChaos second_quantization(const Matrix& C, const VectorChaos& x);

// ---- serialization ----------------------------------------------------------------

std::string to_json(const ChaosVector& v);
ChaosVector chaos_from_json(const std::string& text);

}  // namespace wiener
