#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace photocount::rng {

using Engine = std::mt19937_64;

/// Independent random streams used by the library.
enum class Stream : std::uint32_t { gate_counts = 1, pulse_areas = 2, oracle = 3 };

/// Work is cut into fixed-size blocks, each with its own engine keyed by
/// (seed, stream, block). Any shard layout therefore draws the same numbers.
inline constexpr std::uint64_t kBlockSize = 1u << 16;

inline Engine block_engine(std::uint64_t seed, Stream stream, std::uint64_t block) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(block),
                    static_cast<std::uint32_t>(block >> 32)};
  return Engine(seq);
}

/// SplitMix64 finalizer; derives a child seed for an indexed sub-run.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t block_count(std::uint64_t items) {
  return (items + kBlockSize - 1) / kBlockSize;
}

/// Calls work(shard, first_block, last_block) for `shards` contiguous block
/// ranges, one thread per shard. Callers merge per-shard results afterwards.
template <class Work>
void run_sharded(std::uint64_t n_blocks, unsigned shards, Work&& work) {
  shards = static_cast<unsigned>(std::clamp<std::uint64_t>(shards, 1, std::max<std::uint64_t>(n_blocks, 1)));
  if (shards == 1) {
    work(0u, std::uint64_t{0}, n_blocks);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(shards);
  for (unsigned s = 0; s < shards; ++s) {
    const std::uint64_t first = n_blocks * s / shards;
    const std::uint64_t last = n_blocks * (s + 1) / shards;
    pool.emplace_back([&work, s, first, last] { work(s, first, last); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace photocount::rng
