// Copyright 2026 The NDAL Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ndal {

/// Mixes a parent seed with a stream key (splitmix64 finalizer). Used to give
/// every utterance, batch slot, and step its own independent stream so results
/// never depend on scheduling order.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t key);
std::uint64_t derive_seed(std::uint64_t parent, std::string_view key);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Seeded generator with platform-independent distributions. The standard
/// library's distribution objects are implementation-defined, so the mapping
/// from engine bits to values is done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ndal
