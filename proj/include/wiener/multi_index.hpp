#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace wiener {

/// Enumeration of non-decreasing multi-indices (i_1 <= ... <= i_k) over `dim` symbols.
/// Position of a multi-index is its colex rank as a k-combination with repetition, so
/// there are C(dim + k - 1, k) entries per degree.
class MultiIndexTable {
 public:
  MultiIndexTable(int dim, int degree);

  /// Shared, cached table.
  static std::shared_ptr<const MultiIndexTable> get(int dim, int degree);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  std::size_t size() const { return size_; }

  std::span<const int> index(std::size_t pos) const {
    return {indices_.data() + pos * static_cast<std::size_t>(degree_),
            static_cast<std::size_t>(degree_)};
  }
  /// Number of full-tensor entries equal to this symmetric entry: k! / prod m_v!.
  double multiplicity(std::size_t pos) const { return multiplicity_[pos]; }
  /// prod over distinct values of m_v! (so multiplicity * this == k!).
  double factorial_product(std::size_t pos) const { return factorial_product_[pos]; }

  /// Rank of a sorted multi-index of length degree().
  std::size_t rank(std::span<const int> sorted) const;

 private:
  int dim_;
  int degree_;
  std::size_t size_;
  std::vector<int> indices_;
  std::vector<double> multiplicity_;
  std::vector<double> factorial_product_;
  std::vector<std::size_t> rank_table_;  // degree x (dim + degree): C(c, j + 1)
};

/// Binomial coefficient as an exact 64-bit integer (throws on overflow).
std::uint64_t binomial(int n, int k);
double factorial(int k);

}  // namespace wiener
