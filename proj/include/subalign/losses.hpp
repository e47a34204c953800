// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#pragma once

#include "subalign/core.hpp"
#include "subalign/models.hpp"
#include "subalign/subspace.hpp"

namespace subalign {

/// A loss value with its gradient. For the per-sample losses the gradient is
/// taken w.r.t. the logits that produced `probs`; all reductions are means.
struct LossValueGrad {
  double value = 0.0;
  Matrix grad;
};

/// lambda_* weight the pre-training objective, gamma_* the adaptation ones.
struct LossWeights {
  double lambda_c = 0.1;
  double lambda_cb = 0.1;
  double gamma_c = 0.1;
  double gamma_cb = 0.1;
};

/// Optional per-class reweighting of the target terms. Empty vectors mean
/// unit entropy weights and a uniform class-balance target.
struct TargetWeighting {
  Vector entropy_weights;
  Vector balance_target;
};

/// Mean negative log-likelihood of the true class.
LossValueGrad cross_entropy(const Matrix& probs, const Labels& labels);

/// Mean Shannon entropy of the rows, 0 ln 0 taken as 0. The weighted form
/// scales class k's term by weights(k).
LossValueGrad conditional_entropy(const Matrix& probs);
LossValueGrad conditional_entropy(const Matrix& probs, const Vector& weights);

/// -sum_k [u_k ln pbar_k + (1 - u_k) ln(1 - pbar_k)] for the batch-mean
/// prediction pbar (clamped to [1e-12, 1 - 1e-12]) against u, uniform 1/K
/// unless given.
LossValueGrad class_balance(const Matrix& probs);
LossValueGrad class_balance(const Matrix& probs, const Vector& target);

/// Weighted sum over a labeled source batch and an unlabeled target batch.
struct CompositeLoss {
  double value = 0.0;
  double l_y = 0.0;
  double l_c = 0.0;
  double l_cb = 0.0;
  Matrix grad_source_logits;
  Matrix grad_target_logits;
};

/// L_y + lambda_c L_c + lambda_cb L_cb.
CompositeLoss tafe_loss(const Matrix& src_probs, const Labels& src_labels,
                        const Matrix& tgt_probs, const LossWeights& w,
                        const TargetWeighting& tw = {});

/// L_y + gamma_c L_c + gamma_cb L_cb, target probabilities taken on the
/// source-aligned target features.
CompositeLoss classifier_loss(const Matrix& src_probs, const Labels& src_labels,
                              const Matrix& aligned_tgt_probs, const LossWeights& w,
                              const TargetWeighting& tw = {});

/// Gradient of `classifier_loss` w.r.t. the classifier parameters.
ClassifierGrad classifier_loss_grad(const CompositeLoss& loss, const Matrix& zs,
                                    const Matrix& aligned_zt);

struct AlignmentLoss {
  double value = 0.0;
  double cost = 0.0;  ///< ||W_t phi - W_s||_F^2
  double l_c = 0.0;
  double l_cb = 0.0;
  Matrix grad_phi;
};

/// ||W_t phi - W_s||_F^2 + gamma_c L_c + gamma_cb L_cb, the entropy terms
/// evaluated on reproject(zt) through the fixed classifier `psi`.
AlignmentLoss alignment_loss(const SubspaceBasis& source, const SubspaceBasis& target,
                             const AlignmentMatrix& phi, const Matrix& zt,
                             const ClassifierParams& psi, const LossWeights& w,
                             const TargetWeighting& tw = {});
AlignmentLoss alignment_loss(const SubspaceBasis& source, const SubspaceBasis& target,
                             const AlignmentMatrix& phi, const Matrix& zt,
                             const ClassifierParams& psi, const LossWeights& w,
                             const TargetWeighting& tw, const RowVector& source_anchor);

}  // namespace subalign
