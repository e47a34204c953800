// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "subalign/core.hpp"
#include "subalign/losses.hpp"
#include "subalign/models.hpp"

namespace subalign {

enum class AdaptMode { none, primary_only, independent, joint, alternating };

AdaptMode parse_adapt_mode(std::string_view s);
const char* to_string(AdaptMode mode);

/// Every hyperparameter of pre-training and adaptation. Field names double as
/// the config-file keys.
struct AdaptConfig {
  AdaptMode mode = AdaptMode::alternating;

  // Subspaces. subspace_dim 0 selects default_subspace_dim.
  Index subspace_dim = 0;
  bool center = true;

  double lambda_c = 0.1;
  double lambda_cb = 0.1;
  double gamma_c = 0.1;
  double gamma_cb = 0.1;

  // Outer loop.
  Index n_iter = 10;
  Index t1 = 50;
  Index t2 = 50;
  double convergence_tol = 1e-4;
  double split_fraction = 0.8;
  double target_fraction = 1.0;
  std::uint64_t seed = 0;

  OptimizerKind classifier_optimizer = OptimizerKind::sgd_momentum;
  double classifier_lr = 1e-4;
  double classifier_momentum = 0.9;
  OptimizerKind alignment_optimizer = OptimizerKind::adam;
  double alignment_lr = 1e-3;
  double alignment_momentum = 0.9;

  // Source-only classifier fit used when no pre-trained head is supplied.
  OptimizerKind init_optimizer = OptimizerKind::adam;
  double init_lr = 1e-2;
  Index init_steps = 300;

  bool partial_da = false;
  double tau = 0.1;

  // Pre-training.
  Index epochs = 200;
  OptimizerKind tafe_optimizer = OptimizerKind::adam;
  double tafe_lr = 1e-3;
  double tafe_momentum = 0.9;
  Index batch_source = 64;
  Index batch_target = 64;
  std::vector<Index> hidden_widths{64, 64};
  Index feature_dim = 32;

  // Progressive adaptation.
  bool refit_pool_subspace = true;
  bool warm_start = true;
  double min_pseudo_prob = 0.0;

  LossWeights weights() const { return {lambda_c, lambda_cb, gamma_c, gamma_cb}; }
  OptimizerConfig classifier_opt() const;
  OptimizerConfig alignment_opt() const;
  OptimizerConfig init_opt() const;
  OptimizerConfig tafe_opt() const;

  /// Throws ParameterError on out-of-range values.
  void validate() const;

  /// Assigns one key; throws ConfigError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  /// Canonical `key = value` text, one line per key in `keys()` order.
  std::string to_text() const;
  /// XXH64 of `to_text()`.
  std::uint64_t hash() const;
};

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
/// Duplicate keys and lines without `=` are ConfigErrors.
std::map<std::string, std::string> parse_key_values(std::string_view text);

AdaptConfig parse_adapt_config(std::string_view text);
AdaptConfig load_adapt_config(const std::string& path);

std::string read_text_file(const std::string& path);

}  // namespace subalign
