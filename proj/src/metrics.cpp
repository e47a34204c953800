// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#include "subalign/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "subalign/errors.hpp"

namespace subalign {
namespace {

void check_lengths(const Labels& pred, const Labels& truth) {
  if (pred.size() != truth.size()) {
    throw ParameterError("accuracy: " + std::to_string(pred.size()) + " predictions for " +
                         std::to_string(truth.size()) + " labels");
  }
}

}  // namespace

double accuracy(const Labels& pred, const Labels& truth) {
  check_lengths(pred, truth);
  if (pred.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

PerClassAccuracy per_class_accuracy(const Labels& pred, const Labels& truth, int num_classes) {
  check_lengths(pred, truth);
  if (num_classes < 1) throw ParameterError("per_class_accuracy: num_classes must be >= 1");
  PerClassAccuracy out;
  out.support.assign(static_cast<std::size_t>(num_classes), 0);
  std::vector<Index> hits(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int y = truth[i];
    if (y < 0 || y >= num_classes) {
      throw ParameterError("per_class_accuracy: label " + std::to_string(y) + " out of range");
    }
    ++out.support[static_cast<std::size_t>(y)];
    if (pred[i] == y) ++hits[static_cast<std::size_t>(y)];
  }
  out.accuracy.resize(num_classes);
  for (int k = 0; k < num_classes; ++k) {
    const auto s = out.support[static_cast<std::size_t>(k)];
    out.accuracy(k) = s == 0 ? std::numeric_limits<double>::quiet_NaN()
                             : static_cast<double>(hits[static_cast<std::size_t>(k)]) /
                                   static_cast<double>(s);
  }
  return out;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return out;
}

}  // namespace subalign
