#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace wiener {

/// Number of worker threads used by Monte-Carlo loops. Defaults to the hardware
/// concurrency; the CLI overrides it with --threads.
std::size_t worker_count();
void set_worker_count(std::size_t n);

/// Runs body(chunk) for chunk in [0, chunks). Chunks are the unit of work and of
/// reduction: callers accumulate per-chunk partials and combine them in chunk order,
/// which keeps results independent of the thread count.
void parallel_chunks(std::size_t chunks, const std::function<void(std::size_t)>& body);

/// Chunking of a sample range into fixed-size blocks.
struct ChunkPlan {
  std::size_t total;
  std::size_t block;

  std::size_t chunks() const { return (total + block - 1) / block; }
  std::size_t begin(std::size_t c) const { return c * block; }
  std::size_t end(std::size_t c) const { return std::min(total, (c + 1) * block); }
};

inline ChunkPlan plan_chunks(std::size_t total, std::size_t block = 2048) {
  return ChunkPlan{total, std::max<std::size_t>(block, 1)};
}

}  // namespace wiener
