// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subalign/config.hpp"
#include "subalign/dataset_io.hpp"
#include "subalign/models.hpp"
#include "subalign/uda.hpp"

namespace subalign {

/// A finished adaptation run to domain A, ready to serve predictions.
struct DeployedModel {
  /// Present when features come from a pre-trained extractor; absent for
  /// externally supplied features.
  std::optional<ExtractorParams> extractor;
  AdaptResult result;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;

  Matrix align(const Matrix& za) const { return aligned_features(result, za); }
  Prediction predict(const Matrix& za) const { return predict_target(result, za); }
};

/// Per-row argmax, ties to the lowest class index.
Labels pseudo_label(const Matrix& probs);

struct ProgressiveResult {
  AdaptResult adapt;
  DomainDataset pool;               ///< source rows first, then kept domain-A rows
  std::vector<std::string> pool_domains;  ///< domain tag per pool row
  Matrix aligned_a;                 ///< domain A mapped through the deployed alignment
  Labels pseudo_labels;             ///< for every domain-A row
  std::vector<Index> kept_a_rows;   ///< domain-A rows admitted to the pool
};

/// Maps A through the deployed alignment, pseudo-labels it, pools it with the
/// labeled source and adapts from the pool to B. The pool subspace is refitted
/// unless refit_pool_subspace is off, and the classifier starts from the
/// deployed one when warm_start is on. Rows whose top probability is below
/// min_pseudo_prob are left out of the pool.
ProgressiveResult progressive_adapt(const DeployedModel& model, const DomainDataset& source,
                                    const Matrix& za, const Matrix& zb, const AdaptConfig& cfg,
                                    const AdaptHooks& hooks = {});

}  // namespace subalign
