// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace rlab {

/// SplitMix64 finalizer; used for all seed derivation.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent child seed for `stream` from `base`. Every
/// submodule seed in the project (model init, data order, evaluation sets,
/// per-seed training runs) is obtained through this one function.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  return splitmix64(base ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

// Well-known stream identifiers for derive_seed.
namespace seed_stream {
inline constexpr std::uint64_t kModelInit = 1;
inline constexpr std::uint64_t kTrainData = 2;
inline constexpr std::uint64_t kTestData = 3;
inline constexpr std::uint64_t kInstances = 4;
}  // namespace seed_stream

/// Deterministic random source. Only the mt19937_64 bit stream is used (its
/// output is fixed by the standard); the mappings to ranges and normals are
/// implemented here so results are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  /// Uniform in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    uniform_index(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rlab
