// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "subalign/core.hpp"
#include "subalign/dataset_io.hpp"

namespace subalign {

/// One shifted domain. The generating distribution of the source is rotated by
/// `angle_deg` in the k coordinate planes (e_i, e_{plane_offset*k + i}), scaled,
/// then translated by `translation` along a seeded direction inside the rotated
/// signal subspace.
struct TargetShift {
  std::string name;
  double angle_deg = 45.0;
  double translation = 2.0;
  double scale = 1.0;
  Index plane_offset = 1;
  std::vector<int> classes;  ///< empty: all classes
};

/// Class means live in the first k coordinates, mean c drawn as
/// N(0, 1) * class_separation * spectral_decay^j in coordinate j. Samples add
/// isotropic N(0, noise^2) in all D coordinates.
struct SyntheticSpec {
  int num_classes = 10;
  Index ambient_dim = 50;
  Index intrinsic_dim = 8;
  Index samples_per_class = 200;
  double class_separation = 3.5;
  double spectral_decay = 0.75;
  double noise = 0.5;
  std::uint64_t seed = 0;
  std::vector<TargetShift> targets{{"target_a", 45.0, 2.0, 1.0, 1, {}},
                                   {"target_b", 45.0, 2.0, 1.0, 2, {}}};

  /// Throws ParameterError when the spec cannot be realized.
  void validate() const;
};

/// Parses `key = value` text. Global keys match the field names; `targets`
/// is a comma list of names, and each target takes `<name>.angle_deg`,
/// `<name>.translation`, `<name>.scale`, `<name>.plane_offset` and
/// `<name>.classes`.
SyntheticSpec parse_synthetic_spec(std::string_view text);
std::string to_text(const SyntheticSpec& spec);

struct SyntheticBenchmark {
  DomainDataset source;
  std::vector<DomainDataset> targets;
  Matrix source_means;               ///< K x D
  std::vector<Matrix> target_means;  ///< K x D per target, all classes
  std::vector<Matrix> rotations;     ///< D x D per target
};

/// Pure function of the spec. Rows are grouped by class in ascending order.
SyntheticBenchmark generate_synthetic(const SyntheticSpec& spec);

/// The default benchmark with a single target domain.
SyntheticSpec default_benchmark_spec(std::uint64_t seed);

/// Source with all classes and one target restricted to classes 0..3.
SyntheticSpec partial_benchmark_spec(std::uint64_t seed);

}  // namespace subalign
