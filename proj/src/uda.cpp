// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#include "subalign/uda.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "subalign/errors.hpp"
#include "subalign/rng.hpp"

namespace subalign {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_finite(double value, const char* what, Index iter) {
  if (!std::isfinite(value)) {
    throw NumericalError(std::string("adapt: non-finite ") + what + " in outer iteration " +
                             std::to_string(iter),
                         iter);
  }
}

struct ClassMeans {
  Matrix means;             // K x D
  std::vector<Index> counts;
};

ClassMeans class_means(const DomainDataset& ds) {
  ClassMeans out;
  out.means = Matrix::Zero(ds.num_classes, ds.dim());
  out.counts.assign(static_cast<std::size_t>(ds.num_classes), 0);
  const Labels& y = *ds.labels;
  for (Index i = 0; i < ds.size(); ++i) {
    out.means.row(y[static_cast<std::size_t>(i)]) += ds.features.row(i);
    ++out.counts[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])];
  }
  for (int c = 0; c < ds.num_classes; ++c) {
    if (out.counts[static_cast<std::size_t>(c)] > 0) {
      out.means.row(c) /= static_cast<double>(out.counts[static_cast<std::size_t>(c)]);
    }
  }
  return out;
}

}  // namespace

ClassifierParams fit_source_classifier(const DomainDataset& source, const AdaptConfig& cfg) {
  if (!source.has_labels()) throw ParameterError("fit_source_classifier: source must be labeled");
  ClassifierParams psi = ClassifierParams::zeros(source.dim(), source.num_classes);
  Optimizer opt(cfg.init_opt());
  const Labels& y = *source.labels;
  for (Index s = 0; s < cfg.init_steps; ++s) {
    const LossValueGrad ce = cross_entropy(classifier_forward(psi, source.features), y);
    check_finite(ce.value, "source-only loss", 0);
    const ClassifierGrad g = classifier_backward(source.features, ce.grad);
    opt.step(psi.views(), g.views());
  }
  return psi;
}

AdaptResult adapt(const DomainDataset& source, const Matrix& target, const AdaptConfig& cfg,
                  const AdaptHooks& hooks) {
  cfg.validate();
  if (!source.has_labels()) throw ParameterError("adapt: source must be labeled");
  source.validate();
  if (source.num_classes < 2) throw ParameterError("adapt: need at least 2 classes");
  if (source.dim() != target.cols()) {
    throw ParameterError("adapt: source has " + std::to_string(source.dim()) +
                         " columns, target " + std::to_string(target.cols()));
  }
  if (source.size() < 2 || target.rows() < 2) {
    throw ParameterError("adapt: source and target need at least 2 rows each");
  }
  require_finite(source.features, "source features");
  require_finite(target, "target features");

  const Rng root(cfg.seed);
  AdaptResult res;
  res.mode = cfg.mode;

  if (hooks.initial_classifier != nullptr) {
    const ClassifierParams& init = *hooks.initial_classifier;
    if (init.input_dim() != source.dim() || init.num_classes() != source.num_classes) {
      throw ParameterError("adapt: initial classifier shape does not match the data");
    }
    res.psi = init;
  } else {
    res.psi = fit_source_classifier(source, cfg);
  }

  if (cfg.target_fraction < 1.0) {
    Rng frac_rng = root.fork("target_fraction");
    res.target_rows = split_indices(target.rows(), cfg.target_fraction, frac_rng).first;
    std::sort(res.target_rows.begin(), res.target_rows.end());
  } else {
    res.target_rows.resize(static_cast<std::size_t>(target.rows()));
    for (Index i = 0; i < target.rows(); ++i) res.target_rows[static_cast<std::size_t>(i)] = i;
  }

  if (cfg.mode == AdaptMode::none) {
    res.source_anchor = RowVector::Zero(source.dim());
    return res;
  }

  const Matrix zt = gather_rows(target, res.target_rows);
  Rng srng = root.fork("split:source");
  Rng trng = root.fork("split:target");
  res.source_split = split_indices(source.size(), cfg.split_fraction, srng);
  res.target_split = split_indices(zt.rows(), cfg.split_fraction, trng);

  const Matrix zs1 = gather_rows(source.features, res.source_split.first);
  const Labels ys1 = gather(*source.labels, res.source_split.first);
  const Matrix zt1 = gather_rows(zt, res.target_split.first);
  const Matrix zt2 = gather_rows(zt, res.target_split.second);

  const bool uses_phi = cfg.mode != AdaptMode::primary_only;
  const LossWeights weights = cfg.weights();
  TargetWeighting tw;
  ClassMeans cm;
  if (cfg.partial_da) cm = class_means(source);

  if (uses_phi) {
    if (hooks.source_basis != nullptr) {
      res.source_basis = *hooks.source_basis;
      if (res.source_basis->ambient_dim() != source.dim()) {
        throw ParameterError("adapt: source basis override has the wrong ambient dimension");
      }
    }
    const Index d = cfg.subspace_dim > 0
                        ? cfg.subspace_dim
                        : (res.source_basis ? res.source_basis->dim()
                                            : default_subspace_dim(
                                                  source.dim(), std::min(source.size(), zt.rows())));
    if (!res.source_basis) res.source_basis = fit_subspace(source.features, d, cfg.center);
    if (res.source_basis->dim() != d) {
      throw ParameterError("adapt: source basis override has dimension " +
                           std::to_string(res.source_basis->dim()) + ", config asks for " +
                           std::to_string(d));
    }
    res.target_basis = fit_subspace(zt, d, cfg.center);
    res.phi_init = closed_form_phi(*res.source_basis, *res.target_basis);
    res.phi = res.phi_init;
    res.source_anchor = res.source_basis->mean;
  } else {
    res.source_anchor = RowVector::Zero(source.dim());
  }

  const SubspaceBasis* ws = res.source_basis ? &*res.source_basis : nullptr;
  const SubspaceBasis* wt = res.target_basis ? &*res.target_basis : nullptr;
  auto align = [&](const Matrix& z) -> Matrix {
    if (!uses_phi) return z;
    return reproject(z, *wt, *res.phi, *ws, res.source_anchor);
  };
  auto phase = [&](Index iter, Phase p) {
    if (hooks.on_phase) {
      hooks.on_phase({iter, p, res.psi, res.phi ? &*res.phi : nullptr, ws, wt});
    }
  };

  Optimizer copt(cfg.classifier_opt());
  Optimizer aopt(cfg.alignment_opt());
  const double phi_init_norm = uses_phi ? res.phi_init->phi.norm() : 0.0;
  const double stop_tol = cfg.convergence_tol * std::max(1.0, phi_init_norm);
  const bool may_stop = cfg.mode == AdaptMode::alternating || cfg.mode == AdaptMode::joint;

  for (Index iter = 0; iter < cfg.n_iter; ++iter) {
    const Matrix prev = uses_phi ? res.phi->phi : Matrix();

    if (cfg.partial_da) {
      const Matrix probs = classifier_forward(res.psi, align(zt1));
      res.class_priors = estimate_class_priors(probs, cfg.tau);
      Vector active = (res.class_priors.array() > 0.0).cast<double>();
      tw.entropy_weights = res.class_priors;
      tw.balance_target = active / active.sum();
      if (uses_phi && cfg.center) {
        // Source offset matching the estimated target label mix.
        Vector pi(source.num_classes);
        for (int c = 0; c < source.num_classes; ++c) {
          pi(c) = res.class_priors(c) * static_cast<double>(cm.counts[static_cast<std::size_t>(c)]);
        }
        pi /= pi.sum();
        res.source_anchor = pi.transpose() * cm.means;
      }
    }

    phase(iter, Phase::classifier_begin);
    if (cfg.mode == AdaptMode::joint) {
      for (Index s = 0; s < cfg.t1; ++s) {
        const Matrix at = align(zt1);
        const CompositeLoss lg = classifier_loss(classifier_forward(res.psi, zs1), ys1,
                                                 classifier_forward(res.psi, at), weights, tw);
        check_finite(lg.value, "classifier loss", iter);
        const ClassifierGrad gc = classifier_loss_grad(lg, zs1, at);
        const AlignmentLoss la = alignment_loss(*ws, *wt, *res.phi, zt1, res.psi, weights, tw,
                                                res.source_anchor);
        check_finite(la.value, "alignment loss", iter);
        std::vector<ParamView> params = res.psi.views();
        params.push_back(view(res.phi->phi));
        std::vector<ConstParamView> grads = gc.views();
        grads.push_back(view(la.grad_phi));
        copt.step(params, grads);
      }
    } else {
      const Matrix at = align(zt1);
      for (Index s = 0; s < cfg.t1; ++s) {
        const CompositeLoss lg = classifier_loss(classifier_forward(res.psi, zs1), ys1,
                                                 classifier_forward(res.psi, at), weights, tw);
        check_finite(lg.value, "classifier loss", iter);
        const ClassifierGrad g = classifier_loss_grad(lg, zs1, at);
        copt.step(res.psi.views(), g.views());
      }
    }
    phase(iter, Phase::classifier_end);

    if (cfg.mode == AdaptMode::alternating) {
      phase(iter, Phase::alignment_begin);
      for (Index s = 0; s < cfg.t2; ++s) {
        const AlignmentLoss la = alignment_loss(*ws, *wt, *res.phi, zt2, res.psi, weights, tw,
                                                res.source_anchor);
        check_finite(la.value, "alignment loss", iter);
        std::vector<ParamView> params{view(res.phi->phi)};
        aopt.step(params, {view(la.grad_phi)});
      }
      phase(iter, Phase::alignment_end);
    }

    PhiTraceRow row;
    row.iter = iter;
    {
      const Matrix at = align(zt1);
      row.l_g = classifier_loss(classifier_forward(res.psi, zs1), ys1,
                                classifier_forward(res.psi, at), weights, tw)
                    .value;
    }
    if (uses_phi) {
      require_finite(res.phi->phi, "phi");
      row.phi_dist_init = (res.phi->phi - res.phi_init->phi).norm();
      row.phi_step = (res.phi->phi - prev).norm();
      row.l_a = alignment_loss(*ws, *wt, *res.phi, zt2, res.psi, weights, tw, res.source_anchor)
                    .value;
    } else {
      row.l_a = kNaN;
    }
    row.target_acc = hooks.target_evaluator
                         ? hooks.target_evaluator(argmax_rows(classifier_logits(res.psi, align(target))))
                         : kNaN;
    res.trace.push_back(row);

    if (may_stop && row.phi_step < stop_tol) {
      res.converged = true;
      break;
    }
  }

  require_finite(res.psi.weight, "classifier weights");
  if (res.phi) res.diagnostics = diagnose(*res.phi);
  return res;
}

Matrix aligned_features(const AdaptResult& result, const Matrix& target) {
  if (!result.phi) return target;
  return reproject(target, *result.target_basis, *result.phi, *result.source_basis,
                   result.source_anchor);
}

Prediction predict_target(const AdaptResult& result, const Matrix& target) {
  Prediction out;
  const Matrix logits = classifier_logits(result.psi, aligned_features(result, target));
  out.labels = argmax_rows(logits);
  out.probs = softmax_rows(logits);
  return out;
}

Prediction predict_target(const Matrix& target, const AlignmentMatrix& phi,
                          const SubspaceBasis& source, const SubspaceBasis& target_basis,
                          const ClassifierParams& psi) {
  Prediction out;
  out.probs = classifier_forward(psi, reproject(target, target_basis, phi, source));
  out.labels = argmax_rows(out.probs);
  return out;
}

Vector estimate_class_priors(const Matrix& probs, double tau) {
  if (probs.rows() == 0) throw ParameterError("estimate_class_priors: no rows");
  if (tau < 0.0) throw ParameterError("estimate_class_priors: tau must be >= 0");
  const Vector pbar = probs.colwise().mean().transpose();
  const double mx = pbar.maxCoeff();
  Vector w(pbar.size());
  for (Index k = 0; k < pbar.size(); ++k) w(k) = pbar(k) >= tau * mx ? pbar(k) / mx : 0.0;
  return w;
}

void store_result(Checkpoint& ckpt, const AdaptResult& r) {
  ckpt.put_text("mode", to_string(r.mode));
  ckpt.put("psi.weight", r.psi.weight);
  ckpt.put("psi.bias", r.psi.bias);
  ckpt.put("anchor", r.source_anchor);
  if (r.phi) {
    ckpt.put("phi", r.phi->phi);
    ckpt.put("phi_init", r.phi_init->phi);
    ckpt.put("ws.basis", r.source_basis->basis);
    ckpt.put("ws.mean", r.source_basis->mean);
    ckpt.put("wt.basis", r.target_basis->basis);
    ckpt.put("wt.mean", r.target_basis->mean);
    ckpt.put_text("center", r.source_basis->centered ? "true" : "false");
    ckpt.put_text("phi.rank", std::to_string(r.diagnostics->rank));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", r.diagnostics->condition_number);
    ckpt.put_text("phi.condition_number", buf);
  }
  if (r.class_priors.size() > 0) ckpt.put("class_priors", Matrix(r.class_priors.transpose()));
  ckpt.put_text("converged", r.converged ? "true" : "false");
  ckpt.put_text("iterations", std::to_string(r.trace.size()));
}

AdaptResult load_result(const Checkpoint& ckpt) {
  AdaptResult r;
  try {
    r.mode = parse_adapt_mode(ckpt.text("mode"));
  } catch (const ConfigError& e) {
    throw FormatError(FormatErrorKind::malformed, e.what());
  }
  r.psi.weight = ckpt.tensor("psi.weight");
  r.psi.bias = ckpt.row_vector("psi.bias");
  r.source_anchor = ckpt.row_vector("anchor");
  if (r.psi.bias.size() != r.psi.weight.cols() || r.source_anchor.size() != r.psi.weight.rows()) {
    throw FormatError(FormatErrorKind::malformed, "classifier tensors are not conformable");
  }
  if (ckpt.has("phi")) {
    const bool centered = ckpt.text("center") == "true";
    r.phi = AlignmentMatrix{ckpt.tensor("phi")};
    r.phi_init = AlignmentMatrix{ckpt.tensor("phi_init")};
    r.source_basis = SubspaceBasis{ckpt.tensor("ws.basis"), ckpt.row_vector("ws.mean"), centered};
    r.target_basis = SubspaceBasis{ckpt.tensor("wt.basis"), ckpt.row_vector("wt.mean"), centered};
    const Index d = r.phi->phi.rows();
    const Index dim = r.psi.weight.rows();
    if (r.phi->phi.cols() != d || r.source_basis->basis.rows() != dim ||
        r.source_basis->basis.cols() != d || r.target_basis->basis.rows() != dim ||
        r.target_basis->basis.cols() != d || r.source_basis->mean.size() != dim ||
        r.target_basis->mean.size() != dim) {
      throw FormatError(FormatErrorKind::malformed, "alignment tensors are not conformable");
    }
    r.diagnostics = diagnose(*r.phi);
  }
  if (ckpt.has("class_priors")) r.class_priors = ckpt.row_vector("class_priors").transpose();
  r.converged = ckpt.has_text("converged") && ckpt.text("converged") == "true";
  return r;
}

}  // namespace subalign
