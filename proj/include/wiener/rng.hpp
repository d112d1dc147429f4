#pragma once

#include <cstdint>
#include <span>

namespace wiener {

/// Counter-based normal generator. A stream is identified by (seed, stream index);
/// draw k of a stream is a pure function of (seed, stream, k), so results do not
/// depend on how streams are distributed over threads.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  void fill_normal(std::span<double> out);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace wiener
