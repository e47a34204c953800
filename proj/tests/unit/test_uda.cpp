// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "../support.hpp"
#include "subalign/errors.hpp"
#include "subalign/metrics.hpp"
#include "subalign/synthetic.hpp"
#include "subalign/uda.hpp"

using namespace subalign;

namespace {

SyntheticSpec small_spec(double angle, double translation) {
  SyntheticSpec s;
  s.num_classes = 4;
  s.ambient_dim = 16;
  s.intrinsic_dim = 4;
  s.samples_per_class = 60;
  s.seed = 21;
  s.targets = {{"t", angle, translation, 1.0, 1, {}}};
  return s;
}

AdaptConfig small_config(AdaptMode mode) {
  AdaptConfig cfg;
  cfg.mode = mode;
  cfg.subspace_dim = 4;
  cfg.n_iter = 4;
  cfg.t1 = 20;
  cfg.t2 = 20;
  cfg.classifier_lr = 1e-2;
  cfg.alignment_lr = 1e-2;
  cfg.init_steps = 150;
  cfg.seed = 3;
  return cfg;
}

double target_accuracy(const AdaptResult& r, const DomainDataset& t) {
  return accuracy(predict_target(r, t.features).labels, *t.labels);
}

}  // namespace

TEST(Adapt, IdenticalDomainsKeepPhiNearItsStart) {
  SyntheticSpec s = small_spec(0.0, 0.0);
  s.samples_per_class = 400;
  const SyntheticBenchmark b = generate_synthetic(s);
  // Default optimizer settings and schedule.
  AdaptConfig cfg;
  cfg.subspace_dim = 4;
  cfg.seed = 3;
  const AdaptResult r = adapt(b.source, b.targets[0].features, cfg);
  ASSERT_TRUE(r.phi.has_value());
  EXPECT_LE((r.phi->phi - r.phi_init->phi).norm(), 0.1 * std::sqrt(4.0));
  const double src = accuracy(argmax_rows(classifier_logits(r.psi, b.source.features)), *b.source.labels);
  EXPECT_LE(std::abs(target_accuracy(r, b.targets[0]) - src), 0.02);
}

TEST(Adapt, NoneIsTheSourceOnlyClassifier) {
  const SyntheticBenchmark b = generate_synthetic(small_spec(45.0, 1.0));
  const AdaptConfig cfg = small_config(AdaptMode::none);
  const AdaptResult r = adapt(b.source, b.targets[0].features, cfg);
  const ClassifierParams psi = fit_source_classifier(b.source, cfg);
  EXPECT_EQ(r.psi.weight, psi.weight);
  EXPECT_EQ(r.psi.bias, psi.bias);
  EXPECT_FALSE(r.phi.has_value());
  EXPECT_TRUE(r.trace.empty());
  EXPECT_EQ(aligned_features(r, b.targets[0].features), b.targets[0].features);
}

TEST(Adapt, IndependentKeepsTheClosedForm) {
  const SyntheticBenchmark b = generate_synthetic(small_spec(45.0, 1.0));
  AdaptConfig cfg = small_config(AdaptMode::independent);
  cfg.gamma_c = 0.0;
  cfg.gamma_cb = 0.0;
  const AdaptResult r = adapt(b.source, b.targets[0].features, cfg);
  const SubspaceBasis ws = fit_subspace(b.source.features, 4, true);
  const SubspaceBasis wt = fit_subspace(b.targets[0].features, 4, true);
  EXPECT_EQ(r.phi->phi, closed_form_phi(ws, wt).phi);
  EXPECT_EQ(r.phi->phi, r.phi_init->phi);
  for (const PhiTraceRow& row : r.trace) EXPECT_EQ(row.phi_step, 0.0);
  // The classifier sees the reprojected target.
  EXPECT_LE((aligned_features(r, b.targets[0].features) -
             reproject(b.targets[0].features, wt, closed_form_phi(ws, wt), ws))
                .norm(),
            1e-10);
}

TEST(Adapt, PrimaryOnlyLeavesFeaturesUnaligned) {
  const SyntheticBenchmark b = generate_synthetic(small_spec(45.0, 1.0));
  const AdaptResult r = adapt(b.source, b.targets[0].features, small_config(AdaptMode::primary_only));
  EXPECT_FALSE(r.phi.has_value());
  EXPECT_FALSE(r.source_basis.has_value());
  EXPECT_EQ(aligned_features(r, b.targets[0].features), b.targets[0].features);
  EXPECT_EQ(r.trace.size(), 4u);
  for (const PhiTraceRow& row : r.trace) EXPECT_TRUE(std::isnan(row.l_a));
  const Prediction p = predict_target(r, b.targets[0].features);
  EXPECT_EQ(p.labels, argmax_rows(classifier_logits(r.psi, b.targets[0].features)));
}

TEST(Adapt, AlternatingSeparatesTheTwoLevels) {
  const SyntheticBenchmark b = generate_synthetic(small_spec(45.0, 1.0));
  AdaptConfig cfg = small_config(AdaptMode::alternating);
  cfg.convergence_tol = 0.0;
  std::vector<Phase> order;
  Matrix psi_mark;
  Matrix phi_mark;
  Matrix ws0;
  Matrix wt0;
  int checked = 0;
  AdaptHooks hooks;
  hooks.on_phase = [&](const PhaseView& v) {
    order.push_back(v.phase);
    ASSERT_NE(v.phi, nullptr);
    if (ws0.size() == 0) {
      ws0 = v.source_basis->basis;
      wt0 = v.target_basis->basis;
    }
    EXPECT_EQ(v.source_basis->basis, ws0);
    EXPECT_EQ(v.target_basis->basis, wt0);
    switch (v.phase) {
      case Phase::classifier_begin:
        phi_mark = v.phi->phi;
        psi_mark = v.psi.weight;
        break;
      case Phase::classifier_end:
        EXPECT_EQ(v.phi->phi, phi_mark) << "phi moved during classifier steps";
        EXPECT_NE(v.psi.weight, psi_mark);
        ++checked;
        break;
      case Phase::alignment_begin:
        psi_mark = v.psi.weight;
        phi_mark = v.phi->phi;
        break;
      case Phase::alignment_end:
        EXPECT_EQ(v.psi.weight, psi_mark) << "psi moved during alignment steps";
        EXPECT_NE(v.phi->phi, phi_mark);
        ++checked;
        break;
    }
  };
  const AdaptResult r = adapt(b.source, b.targets[0].features, cfg, hooks);
  EXPECT_EQ(checked, 8);
  ASSERT_EQ(order.size(), 16u);
  for (std::size_t i = 0; i < order.size(); i += 4) {
    EXPECT_EQ(order[i], Phase::classifier_begin);
    EXPECT_EQ(order[i + 1], Phase::classifier_end);
    EXPECT_EQ(order[i + 2], Phase::alignment_begin);
    EXPECT_EQ(order[i + 3], Phase::alignment_end);
  }
  EXPECT_EQ(r.source_basis->basis, ws0);
}

TEST(Adapt, JointMovesBothInOnePhase) {
  const SyntheticBenchmark b = generate_synthetic(small_spec(45.0, 1.0));
  AdaptConfig cfg = small_config(AdaptMode::joint);
  cfg.n_iter = 1;
  Matrix phi0;
  Matrix psi0;
  bool alignment_phase = false;
  AdaptHooks hooks;
  hooks.on_phase = [&](const PhaseView& v) {
    if (v.phase == Phase::alignment_begin || v.phase == Phase::alignment_end) alignment_phase = true;
    if (v.phase == Phase::classifier_begin) {
      phi0 = v.phi->phi;
      psi0 = v.psi.weight;
    } else if (v.phase == Phase::classifier_end) {
      EXPECT_NE(v.phi->phi, phi0);
      EXPECT_NE(v.psi.weight, psi0);
    }
  };
  adapt(b.source, b.targets[0].features, cfg, hooks);
  EXPECT_FALSE(alignment_phase);
}

TEST(Adapt, SplitsAreFixedDisjointAndSeeded) {
  const SyntheticBenchmark b = generate_synthetic(small_spec(45.0, 1.0));
  const AdaptConfig cfg = small_config(AdaptMode::alternating);
  const AdaptResult r = adapt(b.source, b.targets[0].features, cfg);
  const Index n = b.targets[0].size();
  std::set<Index> seen(r.target_split.first.begin(), r.target_split.first.end());
  for (Index i : r.target_split.second) EXPECT_TRUE(seen.insert(i).second);
  EXPECT_EQ(static_cast<Index>(seen.size()), n);
  EXPECT_EQ(static_cast<Index>(r.target_split.first.size()), static_cast<Index>(std::floor(0.8 * n + 0.5)));
  EXPECT_EQ(r.source_split.first.size() + r.source_split.second.size(),
            static_cast<std::size_t>(b.source.size()));

  const AdaptResult again = adapt(b.source, b.targets[0].features, cfg);
  EXPECT_EQ(again.target_split.first, r.target_split.first);
  EXPECT_EQ(again.phi->phi, r.phi->phi);
  EXPECT_EQ(again.psi.weight, r.psi.weight);
}

TEST(Adapt, WithoutTargetTermsPhiStaysAtTheClosedForm) {
  const SyntheticBenchmark b = generate_synthetic(small_spec(45.0, 1.0));
  AdaptConfig cfg = small_config(AdaptMode::alternating);
  cfg.gamma_c = 0.0;
  cfg.gamma_cb = 0.0;
  cfg.t2 = 500;
  cfg.convergence_tol = 0.0;
  // Plain gradient steps: Adam rescales the round-off gradient at the optimum
  // and wanders within about one learning rate of it.
  cfg.alignment_optimizer = OptimizerKind::sgd_momentum;
  cfg.alignment_lr = 0.1;
  const AdaptResult r = adapt(b.source, b.targets[0].features, cfg);
  const double best = alignment_cost(*r.source_basis, *r.target_basis, *r.phi_init);
  EXPECT_LE(alignment_cost(*r.source_basis, *r.target_basis, *r.phi) - best, 1e-6);
  EXPECT_LE((r.phi->phi - r.phi_init->phi).norm(), 1e-8);
}

TEST(Adapt, AlignmentDescentFromRandomStartReachesTheClosedForm) {
  Rng rng(31);
  const SubspaceBasis ws = subalign::testing::basis_of(subalign::testing::random_orthonormal(12, 3, rng));
  const SubspaceBasis wt = subalign::testing::basis_of(subalign::testing::random_orthonormal(12, 3, rng));
  AlignmentMatrix phi{rng.normal_matrix(3, 3)};
  const ClassifierParams psi = ClassifierParams::zeros(12, 2);
  const Matrix zt = rng.normal_matrix(5, 12);
  const LossWeights w{0.0, 0.0, 0.0, 0.0};
  OptimizerConfig oc;
  oc.lr = 0.2;
  oc.momentum = 0.0;
  Optimizer opt(oc);
  for (int s = 0; s < 500; ++s) {
    const AlignmentLoss la = alignment_loss(ws, wt, phi, zt, psi, w);
    opt.step({view(phi.phi)}, {view(la.grad_phi)});
  }
  // Oracle: least squares solution of W_t phi = W_s via normal equations.
  const Matrix oracle = (wt.basis.transpose() * wt.basis).ldlt().solve(wt.basis.transpose() * ws.basis);
  EXPECT_LE((phi.phi - oracle).norm(), 1e-8);
}

TEST(Adapt, ConvergenceStopsEarly) {
  const SyntheticBenchmark b = generate_synthetic(small_spec(45.0, 1.0));
  AdaptConfig cfg = small_config(AdaptMode::alternating);
  cfg.convergence_tol = 10.0;
  const AdaptResult r = adapt(b.source, b.targets[0].features, cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.trace.size(), 1u);
  cfg.convergence_tol = 0.0;
  EXPECT_FALSE(adapt(b.source, b.targets[0].features, cfg).converged);
}

TEST(Adapt, EvaluatorSeesEveryTargetRow) {
  const SyntheticBenchmark b = generate_synthetic(small_spec(45.0, 1.0));
  AdaptConfig cfg = small_config(AdaptMode::alternating);
  cfg.convergence_tol = 0.0;
  int calls = 0;
  AdaptHooks hooks;
  hooks.target_evaluator = [&](const Labels& pred) {
    ++calls;
    EXPECT_EQ(static_cast<Index>(pred.size()), b.targets[0].size());
    return accuracy(pred, *b.targets[0].labels);
  };
  const AdaptResult r = adapt(b.source, b.targets[0].features, cfg, hooks);
  EXPECT_EQ(calls, 4);
  EXPECT_DOUBLE_EQ(r.trace.back().target_acc, target_accuracy(r, b.targets[0]));
}

TEST(Adapt, TargetFractionSubsamplesRows) {
  const SyntheticBenchmark b = generate_synthetic(small_spec(45.0, 1.0));
  AdaptConfig cfg = small_config(AdaptMode::alternating);
  cfg.target_fraction = 0.5;
  const AdaptResult r = adapt(b.source, b.targets[0].features, cfg);
  EXPECT_EQ(r.target_rows.size(), 120u);
  EXPECT_TRUE(std::is_sorted(r.target_rows.begin(), r.target_rows.end()));
  EXPECT_EQ(std::set<Index>(r.target_rows.begin(), r.target_rows.end()).size(), 120u);
  EXPECT_EQ(r.target_split.first.size() + r.target_split.second.size(), 120u);
  const Matrix zt = gather_rows(b.targets[0].features, r.target_rows);
  EXPECT_LE((r.target_basis->basis - fit_subspace(zt, 4, true).basis).norm(), 1e-12);
}

TEST(Adapt, StoreAndLoadPreservePredictions) {
  const SyntheticBenchmark b = generate_synthetic(small_spec(45.0, 1.0));
  for (AdaptMode mode : {AdaptMode::none, AdaptMode::primary_only, AdaptMode::alternating}) {
    const AdaptResult r = adapt(b.source, b.targets[0].features, small_config(mode));
    Checkpoint ck;
    store_result(ck, r);
    const AdaptResult back = load_result(Checkpoint::decode(ck.encode()));
    EXPECT_EQ(back.mode, mode);
    EXPECT_EQ(back.phi.has_value(), r.phi.has_value());
    EXPECT_EQ(predict_target(back, b.targets[0].features).probs,
              predict_target(r, b.targets[0].features).probs);
  }
}

TEST(Adapt, RejectsInconsistentInputs) {
  const SyntheticBenchmark b = generate_synthetic(small_spec(45.0, 1.0));
  const AdaptConfig cfg = small_config(AdaptMode::alternating);
  EXPECT_THROW(adapt(b.source, b.targets[0].features.leftCols(8), cfg), ParameterError);
  DomainDataset unlabeled = b.source;
  unlabeled.labels.reset();
  EXPECT_THROW(adapt(unlabeled, b.targets[0].features, cfg), ParameterError);
  const ClassifierParams wrong = ClassifierParams::zeros(16, 3);
  AdaptHooks hooks;
  hooks.initial_classifier = &wrong;
  EXPECT_THROW(adapt(b.source, b.targets[0].features, cfg, hooks), ParameterError);
  Matrix bad = b.targets[0].features;
  bad(3, 3) = std::nan("");
  EXPECT_THROW(adapt(b.source, bad, cfg), NumericalError);
  AdaptConfig big = cfg;
  big.subspace_dim = 17;
  EXPECT_THROW(adapt(b.source, b.targets[0].features, big), ParameterError);
}

TEST(ClassPriors, MaskAndScale) {
  Matrix probs(2, 4);
  probs << 0.6, 0.3, 0.04, 0.06,  //
      0.4, 0.3, 0.0, 0.3;
  // Mean (0.5, 0.3, 0.02, 0.18); threshold 0.1 * 0.5.
  const Vector w = estimate_class_priors(probs, 0.1);
  EXPECT_NEAR(w(0), 1.0, 1e-15);
  EXPECT_NEAR(w(1), 0.6, 1e-15);
  EXPECT_EQ(w(2), 0.0);
  EXPECT_NEAR(w(3), 0.36, 1e-15);
  EXPECT_EQ(estimate_class_priors(probs, 0.0).minCoeff(), 0.04);
  EXPECT_EQ((estimate_class_priors(probs, 1.0).array() > 0).count(), 1);
  EXPECT_THROW(estimate_class_priors(Matrix(0, 3), 0.1), ParameterError);
}

TEST(Predict, TiesGoToTheLowestClass) {
  AdaptResult r;
  r.psi = ClassifierParams::zeros(3, 4);
  r.source_anchor = RowVector::Zero(3);
  const Prediction p = predict_target(r, Matrix::Ones(5, 3));
  EXPECT_EQ(p.labels, Labels(5, 0));
  EXPECT_NEAR(p.probs(0, 3), 0.25, 1e-15);
}

TEST(PartialAdapt, PriorsAndAnchorFollowTheEstimatedMix) {
  SyntheticSpec s = small_spec(45.0, 1.0);
  s.targets[0].classes = {0, 1};
  const SyntheticBenchmark b = generate_synthetic(s);
  AdaptConfig cfg = small_config(AdaptMode::alternating);
  cfg.partial_da = true;
  cfg.tau = 0.2;
  const AdaptResult r = adapt(b.source, b.targets[0].features, cfg);
  ASSERT_EQ(r.class_priors.size(), 4);
  EXPECT_NEAR(r.class_priors.maxCoeff(), 1.0, 1e-15);
  EXPECT_GE(r.class_priors.minCoeff(), 0.0);

  // Oracle anchor: class means weighted by prior times class count, normalized.
  Matrix means = Matrix::Zero(4, 16);
  Vector count = Vector::Zero(4);
  for (Index i = 0; i < b.source.size(); ++i) {
    const int c = (*b.source.labels)[static_cast<std::size_t>(i)];
    means.row(c) += b.source.features.row(i);
    count(c) += 1;
  }
  RowVector anchor = RowVector::Zero(16);
  double total = 0.0;
  for (int c = 0; c < 4; ++c) {
    const double pi = r.class_priors(c) * count(c);
    anchor += pi * means.row(c) / count(c);
    total += pi;
  }
  anchor /= total;
  EXPECT_LE((r.source_anchor - anchor).norm(), 1e-10);

  Checkpoint ck;
  store_result(ck, r);
  EXPECT_EQ(load_result(ck).class_priors, r.class_priors);
}
