#include "wiener/multi_index.hpp"

#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace wiener {

std::uint64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    const std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
    if (r > std::numeric_limits<std::uint64_t>::max() / num)
      throw std::overflow_error("binomial overflow");
    r = r * num / static_cast<std::uint64_t>(i);
  }
  return r;
}

double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

MultiIndexTable::MultiIndexTable(int dim, int degree)
    : dim_(dim), degree_(degree), size_(0) {
  if (dim < 1) throw std::invalid_argument("MultiIndexTable: dim must be >= 1");
  if (degree < 0) throw std::invalid_argument("MultiIndexTable: degree must be >= 0");
  size_ = static_cast<std::size_t>(binomial(dim + degree - 1, degree));
  if (degree == 0) size_ = 1;
  if (size_ > (std::size_t{1} << 28)) throw std::length_error("MultiIndexTable: table too large");

  const std::size_t width = static_cast<std::size_t>(dim + degree);
  rank_table_.resize(static_cast<std::size_t>(degree) * width);
  for (int j = 0; j < degree; ++j)
    for (std::size_t c = 0; c < width; ++c)
      rank_table_[static_cast<std::size_t>(j) * width + c] =
          static_cast<std::size_t>(binomial(static_cast<int>(c), j + 1));

  indices_.resize(size_ * static_cast<std::size_t>(degree));
  multiplicity_.resize(size_);
  factorial_product_.resize(size_);

  // Colex enumeration of strictly increasing c_0 < ... < c_{k-1} in [0, dim + k - 1),
  // with i_j = c_j - j.
  std::vector<int> c(static_cast<std::size_t>(degree));
  for (int j = 0; j < degree; ++j) c[static_cast<std::size_t>(j)] = j;
  const double kfact = factorial(degree);
  for (std::size_t pos = 0; pos < size_; ++pos) {
    double fp = 1.0;
    int run = 0;
    for (int j = 0; j < degree; ++j) {
      const int v = c[static_cast<std::size_t>(j)] - j;
      indices_[pos * static_cast<std::size_t>(degree) + static_cast<std::size_t>(j)] = v;
      if (j > 0 && v == c[static_cast<std::size_t>(j - 1)] - (j - 1)) {
        ++run;
      } else {
        run = 1;
      }
      fp *= run;
    }
    factorial_product_[pos] = fp;
    multiplicity_[pos] = kfact / fp;

    // Next combination in colex order: bump the lowest position that can move.
    for (int j = 0; j < degree; ++j) {
      const int limit = (j + 1 < degree) ? c[static_cast<std::size_t>(j + 1)] : dim + degree - 1;
      if (c[static_cast<std::size_t>(j)] + 1 < limit) {
        ++c[static_cast<std::size_t>(j)];
        for (int l = 0; l < j; ++l) c[static_cast<std::size_t>(l)] = l;
        break;
      }
    }
  }
}

std::size_t MultiIndexTable::rank(std::span<const int> sorted) const {
  const std::size_t width = static_cast<std::size_t>(dim_ + degree_);
  std::size_t r = 0;
  for (int j = 0; j < degree_; ++j)
    r += rank_table_[static_cast<std::size_t>(j) * width +
                     static_cast<std::size_t>(sorted[static_cast<std::size_t>(j)] + j)];
  return r;
}

std::shared_ptr<const MultiIndexTable> MultiIndexTable::get(int dim, int degree) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const MultiIndexTable>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{dim, degree}];
  if (!slot) slot = std::make_shared<const MultiIndexTable>(dim, degree);
  return slot;
}

}  // namespace wiener
