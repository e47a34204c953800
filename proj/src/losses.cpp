// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#include "subalign/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "subalign/errors.hpp"

namespace subalign {
namespace {

constexpr double kBalanceClamp = 1e-12;

double safe_log(double p) { return std::log(std::max(p, std::numeric_limits<double>::min())); }

CompositeLoss combine(const Matrix& src_probs, const Labels& src_labels,
                      const Matrix& tgt_probs, double wc, double wcb,
                      const TargetWeighting& tw) {
  if (src_probs.cols() != tgt_probs.cols() && tgt_probs.rows() > 0) {
    throw ParameterError("source and target probabilities have different class counts");
  }
  CompositeLoss out;
  LossValueGrad ly = cross_entropy(src_probs, src_labels);
  out.l_y = ly.value;
  out.grad_source_logits = std::move(ly.grad);
  out.grad_target_logits = Matrix::Zero(tgt_probs.rows(), tgt_probs.cols());
  if (tgt_probs.rows() > 0) {
    LossValueGrad lc = tw.entropy_weights.size() > 0
                           ? conditional_entropy(tgt_probs, tw.entropy_weights)
                           : conditional_entropy(tgt_probs);
    LossValueGrad lcb = tw.balance_target.size() > 0
                            ? class_balance(tgt_probs, tw.balance_target)
                            : class_balance(tgt_probs);
    out.l_c = lc.value;
    out.l_cb = lcb.value;
    out.grad_target_logits = wc * lc.grad + wcb * lcb.grad;
  }
  out.value = out.l_y + wc * out.l_c + wcb * out.l_cb;
  return out;
}

}  // namespace

LossValueGrad cross_entropy(const Matrix& probs, const Labels& labels) {
  const Index n = probs.rows();
  const Index k = probs.cols();
  if (static_cast<Index>(labels.size()) != n) {
    throw ParameterError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " rows");
  }
  if (n == 0) throw ParameterError("cross_entropy: empty batch");
  LossValueGrad out;
  out.grad = probs;
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= k) {
      throw ParameterError("cross_entropy: label " + std::to_string(y) + " outside [0, " +
                           std::to_string(k) + ")");
    }
    sum -= safe_log(probs(i, y));
    out.grad(i, y) -= 1.0;
  }
  out.value = sum / static_cast<double>(n);
  out.grad /= static_cast<double>(n);
  return out;
}

LossValueGrad conditional_entropy(const Matrix& probs) {
  return conditional_entropy(probs, Vector::Ones(probs.cols()));
}

LossValueGrad conditional_entropy(const Matrix& probs, const Vector& weights) {
  const Index n = probs.rows();
  const Index k = probs.cols();
  if (n == 0) throw ParameterError("conditional_entropy: empty batch");
  if (weights.size() != k) throw ParameterError("conditional_entropy: weight length != K");
  LossValueGrad out;
  out.grad.resize(n, k);
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    // a_j = w_j p_j (ln p_j + 1); dH/dz_j = -a_j + p_j sum_k a_k.
    double h = 0.0;
    double s = 0.0;
    for (Index j = 0; j < k; ++j) {
      const double p = probs(i, j);
      const double lp = safe_log(p);
      h -= weights(j) * p * lp;
      const double a = weights(j) * p * (lp + 1.0);
      out.grad(i, j) = -a;
      s += a;
    }
    for (Index j = 0; j < k; ++j) out.grad(i, j) += probs(i, j) * s;
    sum += h;
  }
  out.value = sum / static_cast<double>(n);
  out.grad /= static_cast<double>(n);
  return out;
}

LossValueGrad class_balance(const Matrix& probs) {
  const Index k = probs.cols();
  return class_balance(probs, Vector::Constant(k, 1.0 / static_cast<double>(k)));
}

LossValueGrad class_balance(const Matrix& probs, const Vector& target) {
  const Index n = probs.rows();
  const Index k = probs.cols();
  if (n == 0) throw ParameterError("class_balance: empty batch");
  if (target.size() != k) throw ParameterError("class_balance: target length != K");
  const RowVector pbar = probs.colwise().mean();
  RowVector g(k);
  LossValueGrad out;
  for (Index j = 0; j < k; ++j) {
    const double p = std::clamp(pbar(j), kBalanceClamp, 1.0 - kBalanceClamp);
    const double u = target(j);
    out.value -= u * std::log(p) + (1.0 - u) * std::log(1.0 - p);
    g(j) = -u / p + (1.0 - u) / (1.0 - p);
  }
  // dL/dz_ij = (1/n) p_ij (g_j - sum_k g_k p_ik)
  out.grad.resize(n, k);
  for (Index i = 0; i < n; ++i) {
    const double dot = probs.row(i).dot(g);
    for (Index j = 0; j < k; ++j) out.grad(i, j) = probs(i, j) * (g(j) - dot);
  }
  out.grad /= static_cast<double>(n);
  return out;
}

CompositeLoss tafe_loss(const Matrix& src_probs, const Labels& src_labels,
                        const Matrix& tgt_probs, const LossWeights& w,
                        const TargetWeighting& tw) {
  return combine(src_probs, src_labels, tgt_probs, w.lambda_c, w.lambda_cb, tw);
}

CompositeLoss classifier_loss(const Matrix& src_probs, const Labels& src_labels,
                              const Matrix& aligned_tgt_probs, const LossWeights& w,
                              const TargetWeighting& tw) {
  return combine(src_probs, src_labels, aligned_tgt_probs, w.gamma_c, w.gamma_cb, tw);
}

ClassifierGrad classifier_loss_grad(const CompositeLoss& loss, const Matrix& zs,
                                    const Matrix& aligned_zt) {
  ClassifierGrad g = classifier_backward(zs, loss.grad_source_logits);
  if (aligned_zt.rows() > 0) {
    const ClassifierGrad gt = classifier_backward(aligned_zt, loss.grad_target_logits);
    g.weight += gt.weight;
    g.bias += gt.bias;
  }
  return g;
}

AlignmentLoss alignment_loss(const SubspaceBasis& source, const SubspaceBasis& target,
                             const AlignmentMatrix& phi, const Matrix& zt,
                             const ClassifierParams& psi, const LossWeights& w,
                             const TargetWeighting& tw) {
  return alignment_loss(source, target, phi, zt, psi, w, tw, source.mean);
}

AlignmentLoss alignment_loss(const SubspaceBasis& source, const SubspaceBasis& target,
                             const AlignmentMatrix& phi, const Matrix& zt,
                             const ClassifierParams& psi, const LossWeights& w,
                             const TargetWeighting& tw, const RowVector& source_anchor) {
  AlignmentLoss out;
  out.cost = alignment_cost(source, target, phi);
  out.grad_phi = alignment_cost_gradient(source, target, phi);
  out.value = out.cost;
  if (zt.rows() == 0 || (w.gamma_c == 0.0 && w.gamma_cb == 0.0)) return out;

  const Matrix aligned = reproject(zt, target, phi, source, source_anchor);
  const Matrix probs = classifier_forward(psi, aligned);
  const LossValueGrad lc = tw.entropy_weights.size() > 0
                               ? conditional_entropy(probs, tw.entropy_weights)
                               : conditional_entropy(probs);
  const LossValueGrad lcb = tw.balance_target.size() > 0
                                ? class_balance(probs, tw.balance_target)
                                : class_balance(probs);
  out.l_c = lc.value;
  out.l_cb = lcb.value;
  out.value += w.gamma_c * lc.value + w.gamma_cb * lcb.value;

  // aligned = A phi W_s^T + anchor with A = (zt - mu_t) W_t, so
  // dL/dphi = A^T (dL/daligned) W_s.
  const Matrix g_logits = w.gamma_c * lc.grad + w.gamma_cb * lcb.grad;
  const Matrix coords = (zt.rowwise() - target.mean) * target.basis;
  out.grad_phi += coords.transpose() * classifier_input_grad(psi, g_logits) * source.basis;
  return out;
}

}  // namespace subalign
