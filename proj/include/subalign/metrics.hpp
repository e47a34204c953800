// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#pragma once

#include <vector>

#include "subalign/core.hpp"

namespace subalign {

/// Fraction of positions where pred equals truth. Empty input gives 0.
double accuracy(const Labels& pred, const Labels& truth);

struct PerClassAccuracy {
  Vector accuracy;             ///< NaN for classes absent from `truth`.
  std::vector<Index> support;  ///< count of each class in `truth`.
};

PerClassAccuracy per_class_accuracy(const Labels& pred, const Labels& truth, int num_classes);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation; 0 for fewer than two values.
};

MeanStd mean_std(const std::vector<double>& values);

}  // namespace subalign
