// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "subalign/checkpoint.hpp"
#include "subalign/config.hpp"
#include "subalign/dataset_io.hpp"
#include "subalign/losses.hpp"
#include "subalign/models.hpp"
#include "subalign/subspace.hpp"

namespace subalign {

/// One completed outer iteration.
struct PhiTraceRow {
  Index iter = 0;
  double phi_dist_init = 0.0;  ///< ||phi_t - phi_init||_F
  double phi_step = 0.0;       ///< ||phi_t - phi_{t-1}||_F
  double l_g = 0.0;            ///< classifier objective after the classifier phase
  double l_a = 0.0;            ///< alignment objective at the end of the iteration; NaN without phi
  double target_acc = 0.0;     ///< NaN without an evaluator
};

struct AdaptResult {
  AdaptMode mode = AdaptMode::alternating;
  ClassifierParams psi;
  /// Absent for `none` and `primary-only`, which use target features as is.
  std::optional<AlignmentMatrix> phi;
  std::optional<AlignmentMatrix> phi_init;
  std::optional<SubspaceBasis> source_basis;
  std::optional<SubspaceBasis> target_basis;
  /// Offset added after reprojection; the source mean unless partial
  /// adaptation re-weighted it.
  RowVector source_anchor;
  std::optional<AlignmentDiagnostics> diagnostics;
  Vector class_priors;  ///< partial mode only
  std::vector<PhiTraceRow> trace;
  bool converged = false;
  SplitIndices source_split;
  SplitIndices target_split;
  std::vector<Index> target_rows;  ///< target rows used for training
};

enum class Phase { classifier_begin, classifier_end, alignment_begin, alignment_end };

struct PhaseView {
  Index iter;
  Phase phase;
  const ClassifierParams& psi;
  const AlignmentMatrix* phi;
  const SubspaceBasis* source_basis;
  const SubspaceBasis* target_basis;
};

struct AdaptHooks {
  /// Starting classifier, e.g. a pre-trained head. When null a source-only
  /// classifier is fitted with the init_* settings.
  const ClassifierParams* initial_classifier = nullptr;
  /// Replaces the fitted source subspace.
  const SubspaceBasis* source_basis = nullptr;
  /// Receives predictions for every target row after each outer iteration
  /// and returns an accuracy. Target labels stay on the caller's side.
  std::function<double(const Labels&)> target_evaluator;
  std::function<void(const PhaseView&)> on_phase;
};

/// Full-batch source-only fit from zero weights.
ClassifierParams fit_source_classifier(const DomainDataset& source, const AdaptConfig& cfg);

/// Runs the configured mode:
///   none          source classifier on raw target features;
///   primary-only  classifier refinement with the alignment map left as the identity;
///   independent   closed-form phi, then classifier refinement;
///   joint         phi and classifier updated together by one optimizer;
///   alternating   T1 classifier steps on the first split, then T2 phi steps on
///                 the held-out split with the classifier fixed.
/// Splits are fixed per run; subspaces are fitted once.
AdaptResult adapt(const DomainDataset& source, const Matrix& target, const AdaptConfig& cfg,
                  const AdaptHooks& hooks = {});

/// Target features as seen by the classifier of `result`.
Matrix aligned_features(const AdaptResult& result, const Matrix& target);

struct Prediction {
  Labels labels;
  Matrix probs;
};

Prediction predict_target(const AdaptResult& result, const Matrix& target);
Prediction predict_target(const Matrix& target, const AlignmentMatrix& phi,
                          const SubspaceBasis& source, const SubspaceBasis& target_basis,
                          const ClassifierParams& psi);

/// Mean prediction masked to classes with pbar >= tau * max(pbar), scaled so
/// the largest weight is 1.
Vector estimate_class_priors(const Matrix& probs, double tau);

/// Tensors and fields describing `result`, under fixed key names.
void store_result(Checkpoint& ckpt, const AdaptResult& result);
AdaptResult load_result(const Checkpoint& ckpt);

}  // namespace subalign
