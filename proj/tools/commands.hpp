// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace subalign::cli {

struct Common {
  std::optional<std::uint64_t> seed;
  bool record_time = false;
  std::string command_line;
};

struct GenSyntheticArgs {
  std::string spec;
  std::string out_dir;
};

struct TrainTafeArgs {
  std::string source;
  std::string target;
  std::string config;
  std::string out;
};

struct AdaptArgs {
  std::string source;
  std::string target;
  bool features_precomputed = false;
  std::string mode;
  std::string config;
  std::string out;
  std::string eval_labels;
};

struct EvalArgs {
  std::string ckpt;
  std::string target;
  std::string labels;
  std::string report;
  std::vector<std::uint64_t> seeds;
};

struct ProgressiveArgs {
  std::string ckpt;
  std::string target_b;
  std::string config;
  std::string out;
  std::string source;
  std::string target_a;
  std::string labels_a;
  std::string labels_b;
};

struct SweepArgs {
  std::string param;
  std::vector<std::string> values;
  std::string source;
  std::string target;
  std::string labels;
  std::string config;
  std::string mode;
  std::vector<std::uint64_t> seeds;
  std::string report;
};

struct ValidateArgs {
  std::string path;
};

int gen_synthetic(const Common& common, const GenSyntheticArgs& args);
int train_tafe(const Common& common, const TrainTafeArgs& args);
int adapt(const Common& common, const AdaptArgs& args);
int eval(const Common& common, const EvalArgs& args);
int progressive(const Common& common, const ProgressiveArgs& args);
int sweep(const Common& common, const SweepArgs& args);
int validate(const Common& common, const ValidateArgs& args);

}  // namespace subalign::cli
