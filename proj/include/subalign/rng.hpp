// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "subalign/core.hpp"

namespace subalign {

/// Seeded generator with a platform-independent stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Distributions are implemented here rather than taken from
/// <random>, whose distribution algorithms are implementation-defined.
/// Not thread-safe; give each task its own instance (see `fork`).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via the polar Box-Muller method.
  double normal();

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Uniformly random permutation of 0..n-1 (Fisher-Yates).
  std::vector<Index> permutation(Index n);

  Matrix normal_matrix(Index rows, Index cols, double stddev = 1.0);

  /// Independent child generator keyed by a label, so that adding draws to one
  /// stage of a pipeline never shifts the stream seen by another.
  Rng fork(std::string_view label) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace subalign
