// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#include "subalign/tafe.hpp"

#include <algorithm>
#include <cmath>

#include "subalign/errors.hpp"
#include "subalign/losses.hpp"
#include "subalign/rng.hpp"

namespace subalign {

TafeModel::TafeModel(ExtractorParams extractor, ClassifierParams head)
    : extractor_(std::move(extractor)), head_(std::move(head)) {
  if (extractor_.output_dim() != head_.input_dim()) {
    throw ParameterError("TafeModel: extractor output width does not match the head");
  }
}

ExtractorParams& TafeModel::mutable_extractor() {
  if (frozen_) throw ParameterError("TafeModel: extractor is frozen");
  return extractor_;
}

ClassifierParams& TafeModel::mutable_head() {
  if (frozen_) throw ParameterError("TafeModel: head is frozen");
  return head_;
}

TafeResult train_tafe(const DomainDataset& source, const DomainDataset& target,
                      const AdaptConfig& cfg) {
  cfg.validate();
  if (!source.has_labels()) throw ParameterError("train_tafe: source must be labeled");
  if (source.size() == 0 || target.size() == 0) {
    throw ParameterError("train_tafe: empty source or target");
  }
  if (source.dim() != target.dim()) {
    throw ParameterError("train_tafe: source has " + std::to_string(source.dim()) +
                         " columns, target " + std::to_string(target.dim()));
  }
  source.validate();
  const int num_classes = source.num_classes;
  if (num_classes < 2) throw ParameterError("train_tafe: need at least 2 classes");

  const Rng root(cfg.seed);
  Rng init_rng = root.fork("tafe:init");
  TafeModel model(init_extractor(source.dim(), cfg.hidden_widths, cfg.feature_dim, init_rng),
                  ClassifierParams::zeros(cfg.feature_dim, num_classes));
  {
    // Small random head so the first target predictions are not all uniform.
    Matrix& w = model.mutable_head().weight;
    const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.feature_dim));
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = init_rng.uniform(-bound, bound);
  }

  Rng batch_rng = root.fork("tafe:batches");
  Optimizer opt(cfg.tafe_opt());
  const LossWeights weights = cfg.weights();
  const Labels& ys = *source.labels;
  const Index ns = source.size();
  const Index nt = target.size();
  const Index bs = std::min(cfg.batch_source, ns);
  const Index bt = std::min(cfg.batch_target, nt);
  const Index steps_per_epoch = (ns + bs - 1) / bs;

  std::vector<TafeTraceRow> trace;
  std::vector<Index> tperm = batch_rng.permutation(nt);
  Index tpos = 0;
  std::int64_t step = 0;
  for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<Index> sperm = batch_rng.permutation(ns);
    TafeTraceRow row;
    row.epoch = epoch;
    for (Index s = 0; s < steps_per_epoch; ++s) {
      const Index lo = s * bs;
      const Index hi = std::min(ns, lo + bs);
      const std::span<const Index> sidx(sperm.data() + lo, static_cast<std::size_t>(hi - lo));
      std::vector<Index> tidx;
      tidx.reserve(static_cast<std::size_t>(bt));
      for (Index j = 0; j < bt; ++j) {
        if (tpos == nt) {
          tperm = batch_rng.permutation(nt);
          tpos = 0;
        }
        tidx.push_back(tperm[static_cast<std::size_t>(tpos++)]);
      }

      const Matrix xs = gather_rows(source.features, sidx);
      const Labels yb = gather(ys, sidx);
      const Matrix xt = gather_rows(target.features, tidx);

      ExtractorCache cs;
      ExtractorCache ct;
      const ExtractorParams& omega = model.extractor();
      const ClassifierParams& head = model.head();
      const Matrix zs = extractor_forward(omega, xs, cs);
      const Matrix zt = extractor_forward(omega, xt, ct);
      const CompositeLoss loss = tafe_loss(classifier_forward(head, zs), yb,
                                           classifier_forward(head, zt), weights);
      if (!std::isfinite(loss.value)) {
        throw NumericalError("train_tafe: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", step " + std::to_string(s),
                             step);
      }

      const ClassifierGrad gh = classifier_loss_grad(loss, zs, zt);
      ExtractorGrad go = extractor_backward(
          omega, cs, classifier_input_grad(head, loss.grad_source_logits));
      const ExtractorGrad got = extractor_backward(
          omega, ct, classifier_input_grad(head, loss.grad_target_logits));
      for (std::size_t l = 0; l < go.weights.size(); ++l) {
        go.weights[l] += got.weights[l];
        go.biases[l] += got.biases[l];
      }

      std::vector<ParamView> params = model.mutable_extractor().views();
      std::vector<ConstParamView> grads = std::as_const(go).views();
      for (const ParamView& v : model.mutable_head().views()) params.push_back(v);
      for (const ConstParamView& v : gh.views()) grads.push_back(v);
      opt.step(params, grads);
      ++step;

      row.l_y += loss.l_y;
      row.l_c += loss.l_c;
      row.l_cb += loss.l_cb;
    }
    const auto steps = static_cast<double>(steps_per_epoch);
    row.l_y /= steps;
    row.l_c /= steps;
    row.l_cb /= steps;
    row.total = row.l_y + weights.lambda_c * row.l_c + weights.lambda_cb * row.l_cb;
    trace.push_back(row);
  }

  model.freeze();
  Matrix zs = extract_features(model, source.features);
  Matrix zt = extract_features(model, target.features);
  require_finite(zs, "extracted source features");
  require_finite(zt, "extracted target features");
  return {std::move(model), std::move(trace), std::move(zs), std::move(zt)};
}

Matrix extract_features(const TafeModel& model, const Matrix& x) {
  if (!model.frozen()) throw ParameterError("extract_features: model is not frozen");
  return extractor_forward(model.extractor(), x);
}

void store_extractor(Checkpoint& ckpt, const ExtractorParams& omega) {
  ckpt.put_text("omega.layers", std::to_string(omega.num_layers()));
  for (std::size_t l = 0; l < omega.num_layers(); ++l) {
    ckpt.put("omega.w" + std::to_string(l), omega.weights[l]);
    ckpt.put("omega.b" + std::to_string(l), omega.biases[l]);
  }
}

bool has_extractor(const Checkpoint& ckpt) { return ckpt.has_text("omega.layers"); }

ExtractorParams load_extractor(const Checkpoint& ckpt) {
  const std::string& n = ckpt.text("omega.layers");
  std::size_t layers = 0;
  try {
    layers = std::stoul(n);
  } catch (const std::exception&) {
    throw FormatError(FormatErrorKind::malformed, "omega.layers is not a count");
  }
  ExtractorParams omega;
  for (std::size_t l = 0; l < layers; ++l) {
    omega.weights.push_back(ckpt.tensor("omega.w" + std::to_string(l)));
    omega.biases.push_back(ckpt.row_vector("omega.b" + std::to_string(l)));
    if (l > 0 && omega.weights[l].rows() != omega.weights[l - 1].cols()) {
      throw FormatError(FormatErrorKind::malformed, "extractor layers are not conformable");
    }
    if (omega.biases[l].size() != omega.weights[l].cols()) {
      throw FormatError(FormatErrorKind::malformed, "extractor bias width mismatch");
    }
  }
  return omega;
}

}  // namespace subalign
