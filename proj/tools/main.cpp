// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#include <CLI11.hpp>
#include <exception>
#include <filesystem>
#include <iostream>

#include "commands.hpp"
#include "subalign/errors.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

constexpr const char* kFooter = R"(Exit codes: 0 success, 2 usage or config error, 3 data error, 4 numerical failure.

CSV columns, in order:
  train-tafe  <out>.trace.csv      epoch,l_y,l_c,l_cb,total
  adapt       <out>.phi_trace.csv  iter,phi_dist_init,phi_step,l_g,l_a,target_acc
  eval        --report             run,accuracy,class_0,...,class_{K-1}  (plus mean and std rows with --seeds)
  progressive <out>.chain.csv      stage,domain,accuracy,condition_number
  sweep       --report             param,value,mean_accuracy,std_accuracy,num_seeds
Every command also writes a JSON manifest next to its main output.)";

}  // namespace

int main(int argc, char** argv) {
  using namespace subalign::cli;

  CLI::App app{"Subspace-alignment domain adaptation toolkit", "subalign"};
  app.set_version_flag("--version", SUBALIGN_VERSION);
  app.footer(kFooter);
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Seed for every random choice; overrides the config seed");
  app.add_flag("--record-time", common.record_time, "Add wall-clock seconds to manifests");

  GenSyntheticArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Write a synthetic multi-domain benchmark");
  gen_cmd->add_option("--spec", gen.spec, "Benchmark spec (key = value); built-in default when omitted")
      ->check(CLI::ExistingFile);
  gen_cmd->add_option("--out-dir", gen.out_dir, "Output directory")->required();

  TrainTafeArgs tt;
  auto* tt_cmd = app.add_subcommand("train-tafe", "Train the feature extractor and head");
  tt_cmd->add_option("--source", tt.source, "Labeled source features (SAF1 or CSV)")->required();
  tt_cmd->add_option("--target", tt.target, "Target features; labels are ignored")->required();
  tt_cmd->add_option("--config", tt.config, "Config file (key = value)");
  tt_cmd->add_option("--out", tt.out, "Checkpoint path")->required();

  AdaptArgs ad;
  auto* ad_cmd = app.add_subcommand("adapt", "Adapt a classifier from source to target");
  ad_cmd->add_option("--source", ad.source, "Labeled source features")->required();
  ad_cmd->add_option("--target", ad.target, "Target features; labels are ignored")->required();
  ad_cmd->add_flag("--features-precomputed", ad.features_precomputed,
                   "Use the inputs as features and skip extractor training");
  ad_cmd->add_option("--mode", ad.mode, "none, primary-only, independent, joint or alternating")
      ->check(CLI::IsMember({"none", "primary-only", "independent", "joint", "alternating"}));
  ad_cmd->add_option("--config", ad.config, "Config file (key = value)");
  ad_cmd->add_option("--out", ad.out, "Checkpoint path")->required();
  ad_cmd->add_option("--eval-labels", ad.eval_labels,
                     "Target labels used only to fill the target_acc trace column");

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "Score a checkpoint on labeled target data");
  ev_cmd->add_option("--ckpt", ev.ckpt, "Checkpoint, or a pattern containing {seed} with --seeds")
      ->required();
  ev_cmd->add_option("--target", ev.target, "Target features")->required();
  ev_cmd->add_option("--labels", ev.labels, "File carrying the target labels (SAF1 or CSV)")->required();
  ev_cmd->add_option("--report", ev.report, "CSV report path")->required();
  ev_cmd->add_option("--seeds", ev.seeds, "Seeds to aggregate over")->delimiter(',');

  ProgressiveArgs pg;
  auto* pg_cmd = app.add_subcommand("progressive", "Adapt a deployed model to a further domain");
  pg_cmd->add_option("--ckpt", pg.ckpt, "Checkpoint of the deployed adapt run")->required();
  pg_cmd->add_option("--target-b", pg.target_b, "Features of the new domain")->required();
  pg_cmd->add_option("--config", pg.config, "Config file (key = value)");
  pg_cmd->add_option("--out", pg.out, "Checkpoint path")->required();
  pg_cmd->add_option("--source", pg.source, "Source features; defaults to the path stored in --ckpt");
  pg_cmd->add_option("--target-a", pg.target_a,
                     "Domain-A features; defaults to the target path stored in --ckpt");
  pg_cmd->add_option("--labels-a", pg.labels_a, "Domain-A labels for the chain report");
  pg_cmd->add_option("--labels-b", pg.labels_b, "Domain-B labels for the chain report");

  SweepArgs sw;
  auto* sw_cmd = app.add_subcommand("sweep", "Run adapt over values of one config key");
  sw_cmd->add_option("--param", sw.param, "Config key to vary")->required();
  sw_cmd->add_option("--values", sw.values, "Values to try")->required()->delimiter(',');
  sw_cmd->add_option("--source", sw.source, "Labeled source features")->required();
  sw_cmd->add_option("--target", sw.target, "Target features")->required();
  sw_cmd->add_option("--labels", sw.labels, "Target labels (SAF1 or CSV)")->required();
  sw_cmd->add_option("--config", sw.config, "Config file (key = value)");
  sw_cmd->add_option("--mode", sw.mode, "Adaptation mode")
      ->check(CLI::IsMember({"none", "primary-only", "independent", "joint", "alternating"}));
  sw_cmd->add_option("--seeds", sw.seeds, "Seeds averaged per value; defaults to the run seed")
      ->delimiter(',');
  sw_cmd->add_option("--report", sw.report, "CSV report path")->required();

  ValidateArgs va;
  auto* va_cmd = app.add_subcommand("validate", "Check a SAF1 feature file or a checkpoint");
  va_cmd->add_option("path", va.path, "File to check")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (app.count("--seed") > 0) common.seed = seed;
  common.command_line = "subalign";
  for (int i = 1; i < argc; ++i) common.command_line += std::string(" ") + argv[i];

  try {
    if (*gen_cmd) return gen_synthetic(common, gen);
    if (*tt_cmd) return train_tafe(common, tt);
    if (*ad_cmd) return adapt(common, ad);
    if (*ev_cmd) return eval(common, ev);
    if (*pg_cmd) return progressive(common, pg);
    if (*sw_cmd) return sweep(common, sw);
    if (*va_cmd) return validate(common, va);
  } catch (const subalign::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const subalign::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitData;
  } catch (const subalign::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const subalign::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
