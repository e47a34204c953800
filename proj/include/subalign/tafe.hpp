// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "subalign/checkpoint.hpp"
#include "subalign/config.hpp"
#include "subalign/dataset_io.hpp"
#include "subalign/models.hpp"

namespace subalign {

/// Extractor plus classifier head trained jointly on labeled source and
/// unlabeled target data. After `freeze` the extractor can only be read.
class TafeModel {
 public:
  TafeModel(ExtractorParams extractor, ClassifierParams head);

  const ExtractorParams& extractor() const { return extractor_; }
  const ClassifierParams& head() const { return head_; }
  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }

  /// Mutable access for training; throws ParameterError once frozen.
  ExtractorParams& mutable_extractor();
  ClassifierParams& mutable_head();

  std::uint64_t digest() const { return extractor_digest(extractor_); }

 private:
  ExtractorParams extractor_;
  ClassifierParams head_;
  bool frozen_ = false;
};

struct TafeTraceRow {
  Index epoch = 0;
  double l_y = 0.0;  ///< epoch means over mini-batch steps
  double l_c = 0.0;
  double l_cb = 0.0;
  double total = 0.0;
};

struct TafeResult {
  TafeModel model;
  std::vector<TafeTraceRow> trace;
  Matrix source_features;  ///< extractor output on the full source after training
  Matrix target_features;
};

/// Pre-trains extractor and head on L_y + lambda_c L_c + lambda_cb L_cb.
/// Each step pairs a source mini-batch with an independently drawn target
/// mini-batch; an epoch covers the source once and the target cyclically.
/// Returns a frozen model. Throws NumericalError on a non-finite loss.
TafeResult train_tafe(const DomainDataset& source, const DomainDataset& target,
                      const AdaptConfig& cfg);

/// Z = F(x) through a frozen model.
Matrix extract_features(const TafeModel& model, const Matrix& x);

void store_extractor(Checkpoint& ckpt, const ExtractorParams& omega);
bool has_extractor(const Checkpoint& ckpt);
ExtractorParams load_extractor(const Checkpoint& ckpt);

}  // namespace subalign
