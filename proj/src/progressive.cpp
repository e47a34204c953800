// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#include "subalign/progressive.hpp"

#include "subalign/errors.hpp"

namespace subalign {

Labels pseudo_label(const Matrix& probs) { return argmax_rows(probs); }

ProgressiveResult progressive_adapt(const DeployedModel& model, const DomainDataset& source,
                                    const Matrix& za, const Matrix& zb, const AdaptConfig& cfg,
                                    const AdaptHooks& hooks) {
  if (!source.has_labels()) throw ParameterError("progressive_adapt: source must be labeled");
  if (zb.rows() == 0) throw ParameterError("progressive_adapt: domain B is empty");
  const Index dim = source.dim();
  if (za.cols() != dim || zb.cols() != dim || model.result.psi.input_dim() != dim) {
    throw ParameterError("progressive_adapt: domains A and B must share the source width " +
                         std::to_string(dim));
  }

  ProgressiveResult out;
  out.aligned_a = model.align(za);
  const Matrix probs = classifier_forward(model.result.psi, out.aligned_a);
  out.pseudo_labels = pseudo_label(probs);
  for (Index i = 0; i < za.rows(); ++i) {
    if (probs.row(i).maxCoeff() >= cfg.min_pseudo_prob) out.kept_a_rows.push_back(i);
  }

  const Index na = static_cast<Index>(out.kept_a_rows.size());
  out.pool.domain_tag = "pool";
  out.pool.num_classes = source.num_classes;
  out.pool.features.resize(source.size() + na, dim);
  out.pool.features.topRows(source.size()) = source.features;
  Labels labels = *source.labels;
  out.pool_domains.assign(static_cast<std::size_t>(source.size()),
                          source.domain_tag.empty() ? "source" : source.domain_tag);
  for (Index j = 0; j < na; ++j) {
    const Index i = out.kept_a_rows[static_cast<std::size_t>(j)];
    out.pool.features.row(source.size() + j) = out.aligned_a.row(i);
    labels.push_back(out.pseudo_labels[static_cast<std::size_t>(i)]);
    out.pool_domains.emplace_back("target_a");
  }
  out.pool.labels = std::move(labels);

  AdaptHooks h = hooks;
  if (cfg.warm_start && h.initial_classifier == nullptr) h.initial_classifier = &model.result.psi;
  if (!cfg.refit_pool_subspace && h.source_basis == nullptr) {
    if (!model.result.source_basis) {
      throw ParameterError("progressive_adapt: the deployed model has no source subspace to reuse");
    }
    h.source_basis = &*model.result.source_basis;
  }
  out.adapt = adapt(out.pool, zb, cfg, h);
  return out;
}

}  // namespace subalign
