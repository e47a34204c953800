// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <limits>
#include <nlohmann/json.hpp>
#include <utility>

#include "subalign/checkpoint.hpp"
#include "subalign/config.hpp"
#include "subalign/dataset_io.hpp"
#include "subalign/errors.hpp"
#include "subalign/metrics.hpp"
#include "subalign/progressive.hpp"
#include "subalign/synthetic.hpp"
#include "subalign/tafe.hpp"
#include "subalign/uda.hpp"
#include "subalign/xxhash.hpp"

namespace subalign::cli {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::string fmt(const char* spec, double x) {
  if (std::isnan(x)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

std::string acc_str(double x) { return fmt("%.6f", x); }
std::string num_str(double x) { return fmt("%.9g", x); }

/// `run.ckpt` + `.phi_trace.csv` -> `run.phi_trace.csv`.
std::string sibling(const std::string& out, const std::string& suffix) {
  fs::path p(out);
  p.replace_extension();
  return p.string() + suffix;
}

std::string file_digest(const std::string& path) { return to_hex(xxh64(read_file_bytes(path))); }

/// Collects outputs in memory and writes them only once everything succeeded.
class Outputs {
 public:
  void add(const std::string& path, std::string text) {
    files_.emplace_back(path, std::move(text));
  }
  void add(const std::string& path, const std::vector<std::byte>& bytes) {
    files_.emplace_back(path, std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }

  /// Writes every file, then the manifest describing them.
  void commit(const Common& common, const std::string& manifest_path,
              const std::vector<std::string>& inputs, const std::string& config_hash,
              std::uint64_t seed, Clock::time_point started) const {
    nlohmann::ordered_json m;
    m["toolkit_version"] = SUBALIGN_VERSION;
    m["command"] = common.command_line;
    m["seed"] = seed;
    m["config_hash"] = config_hash;
    nlohmann::ordered_json in = nlohmann::ordered_json::object();
    for (const std::string& p : inputs) {
      if (!p.empty()) in[p] = file_digest(p);
    }
    m["inputs"] = in;
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (const auto& [path, text] : files_) out[path] = to_hex(xxh64(text));
    m["outputs"] = out;
    if (common.record_time) {
      m["wall_clock_seconds"] = std::chrono::duration<double>(Clock::now() - started).count();
    }
    for (const auto& [path, text] : files_) {
      const fs::path parent = fs::path(path).parent_path();
      if (!parent.empty()) fs::create_directories(parent);
      write_file_atomic(path, text);
    }
    write_file_atomic(manifest_path, m.dump(2) + "\n");
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

AdaptConfig load_config(const Common& common, const std::string& path) {
  AdaptConfig cfg = path.empty() ? AdaptConfig{} : load_adapt_config(path);
  if (common.seed) cfg.seed = *common.seed;
  try {
    cfg.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

DomainDataset without_labels(DomainDataset ds) {
  ds.labels.reset();
  return ds;
}

Labels load_labels(const std::string& path, Index expected_rows) {
  DomainDataset ds = read_dataset(path);
  if (!ds.labels) {
    throw FormatError(FormatErrorKind::malformed, "'" + path + "' carries no labels");
  }
  if (static_cast<Index>(ds.labels->size()) != expected_rows) {
    throw ParameterError("'" + path + "' has " + std::to_string(ds.labels->size()) +
                         " labels for " + std::to_string(expected_rows) + " target rows");
  }
  return *ds.labels;
}

std::string trace_csv(const std::vector<PhiTraceRow>& trace) {
  std::string out = "iter,phi_dist_init,phi_step,l_g,l_a,target_acc\n";
  for (const PhiTraceRow& r : trace) {
    out += std::to_string(r.iter) + "," + num_str(r.phi_dist_init) + "," + num_str(r.phi_step) +
           "," + num_str(r.l_g) + "," + num_str(r.l_a) + "," + acc_str(r.target_acc) + "\n";
  }
  return out;
}

std::string condition_str(const AdaptResult& r) {
  return r.diagnostics ? num_str(r.diagnostics->condition_number) : "";
}

void print_result_summary(const AdaptResult& r) {
  std::cout << "mode " << to_string(r.mode) << ", " << r.trace.size() << " outer iterations"
            << (r.converged ? " (converged)" : "") << "\n";
  if (r.diagnostics) {
    std::cout << "phi rank " << r.diagnostics->rank << " of " << r.phi->dim()
              << ", condition number " << num_str(r.diagnostics->condition_number) << "\n";
  }
}

/// Features of a stored run's domain: the raw file when features were
/// supplied, the extractor output otherwise.
Matrix features_for(const Checkpoint& ck, const DomainDataset& ds) {
  if (has_extractor(ck)) return extractor_forward(load_extractor(ck), ds.features);
  return ds.features;
}

}  // namespace

int gen_synthetic(const Common& common, const GenSyntheticArgs& args) {
  const auto started = Clock::now();
  SyntheticSpec spec = args.spec.empty() ? SyntheticSpec{} : parse_synthetic_spec(read_text_file(args.spec));
  if (common.seed) spec.seed = *common.seed;
  const SyntheticBenchmark bench = generate_synthetic(spec);

  Outputs out;
  const fs::path dir(args.out_dir);
  out.add((dir / "source.saf").string(), encode_features(bench.source));
  for (const DomainDataset& t : bench.targets) {
    out.add((dir / (t.domain_tag + ".saf")).string(), encode_features(t));
  }
  out.add((dir / "spec.txt").string(), to_text(spec));
  fs::create_directories(dir);
  out.commit(common, (dir / "manifest.json").string(), {args.spec}, to_hex(xxh64(to_text(spec))),
             spec.seed, started);
  std::cout << "wrote " << 1 + bench.targets.size() << " domains to " << args.out_dir << "\n";
  return 0;
}

int train_tafe(const Common& common, const TrainTafeArgs& args) {
  const auto started = Clock::now();
  const AdaptConfig cfg = load_config(common, args.config);
  const DomainDataset source = read_dataset(args.source);
  const DomainDataset target = without_labels(read_dataset(args.target));
  const TafeResult tr = subalign::train_tafe(source, target, cfg);

  Checkpoint ck;
  ck.put_text("kind", "tafe");
  ck.put_text("config", cfg.to_text());
  ck.put_text("source_path", args.source);
  ck.put_text("target_path", args.target);
  store_extractor(ck, tr.model.extractor());
  ck.put_text("omega.digest", to_hex(tr.model.digest()));
  ck.put("head.weight", tr.model.head().weight);
  ck.put("head.bias", tr.model.head().bias);

  std::string csv = "epoch,l_y,l_c,l_cb,total\n";
  for (const TafeTraceRow& r : tr.trace) {
    csv += std::to_string(r.epoch) + "," + num_str(r.l_y) + "," + num_str(r.l_c) + "," +
           num_str(r.l_cb) + "," + num_str(r.total) + "\n";
  }
  Outputs out;
  out.add(args.out, ck.encode());
  out.add(sibling(args.out, ".trace.csv"), csv);
  out.commit(common, sibling(args.out, ".manifest.json"), {args.source, args.target, args.config},
             to_hex(cfg.hash()), cfg.seed, started);
  const TafeTraceRow& last = tr.trace.back();
  std::cout << "trained " << tr.trace.size() << " epochs, final loss " << num_str(last.total)
            << ", extractor digest " << to_hex(tr.model.digest()) << "\n";
  return 0;
}

int adapt(const Common& common, const AdaptArgs& args) {
  const auto started = Clock::now();
  AdaptConfig cfg = load_config(common, args.config);
  if (!args.mode.empty()) cfg.mode = parse_adapt_mode(args.mode);
  const DomainDataset source = read_dataset(args.source);
  const DomainDataset target = without_labels(read_dataset(args.target));
  if (!source.has_labels()) throw ParameterError("'" + args.source + "' carries no labels");

  Checkpoint ck;
  DomainDataset zs{source.features, source.labels, "source", source.num_classes};
  Matrix zt = target.features;
  std::optional<TafeResult> tafe;
  AdaptHooks hooks;
  if (!args.features_precomputed) {
    tafe.emplace(subalign::train_tafe(source, target, cfg));
    zs.features = tafe->source_features;
    zt = tafe->target_features;
    hooks.initial_classifier = &tafe->model.head();
    store_extractor(ck, tafe->model.extractor());
    ck.put_text("omega.digest", to_hex(tafe->model.digest()));
  }
  Labels eval_labels;
  if (!args.eval_labels.empty()) {
    eval_labels = load_labels(args.eval_labels, zt.rows());
    hooks.target_evaluator = [&](const Labels& pred) { return accuracy(pred, eval_labels); };
  }

  const AdaptResult res = subalign::adapt(zs, zt, cfg, hooks);
  if (tafe && extractor_digest(tafe->model.extractor()) != tafe->model.digest()) {
    throw NumericalError("extractor changed during adaptation");
  }

  ck.put_text("kind", "adapt");
  ck.put_text("config", cfg.to_text());
  ck.put_text("config_hash", to_hex(cfg.hash()));
  ck.put_text("seed", std::to_string(cfg.seed));
  ck.put_text("source_path", args.source);
  ck.put_text("target_path", args.target);
  ck.put_text("source_digest", file_digest(args.source));
  ck.put_text("target_digest", file_digest(args.target));
  ck.put_text("features_precomputed", args.features_precomputed ? "true" : "false");
  store_result(ck, res);

  Outputs out;
  out.add(args.out, ck.encode());
  out.add(sibling(args.out, ".phi_trace.csv"), trace_csv(res.trace));
  out.commit(common, sibling(args.out, ".manifest.json"),
             {args.source, args.target, args.config, args.eval_labels}, to_hex(cfg.hash()), cfg.seed,
             started);
  print_result_summary(res);
  if (!eval_labels.empty()) {
    std::cout << "target accuracy " << acc_str(accuracy(predict_target(res, zt).labels, eval_labels))
              << "\n";
  }
  return 0;
}

int eval(const Common& common, const EvalArgs& args) {
  const auto started = Clock::now();
  const DomainDataset target = read_dataset(args.target);
  std::vector<std::pair<std::string, std::string>> runs;  // (run id, checkpoint path)
  if (args.seeds.empty()) {
    runs.emplace_back("0", args.ckpt);
  } else {
    const auto pos = args.ckpt.find("{seed}");
    if (pos == std::string::npos) {
      throw ConfigError("--seeds needs a checkpoint pattern containing {seed}");
    }
    for (std::uint64_t s : args.seeds) {
      std::string p = args.ckpt;
      p.replace(pos, 6, std::to_string(s));
      runs.emplace_back(std::to_string(s), p);
    }
  }

  const Labels truth = load_labels(args.labels, target.size());
  std::vector<std::string> inputs{args.target, args.labels};
  std::vector<double> accs;
  std::vector<Vector> per_class;
  int num_classes = 0;
  std::string rows;
  for (const auto& [run, path] : runs) {
    const Checkpoint ck = Checkpoint::load(path);
    inputs.push_back(path);
    const AdaptResult res = load_result(ck);
    num_classes = static_cast<int>(res.psi.num_classes());
    const Labels pred = predict_target(res, features_for(ck, target)).labels;
    const double acc = accuracy(pred, truth);
    const PerClassAccuracy pc = per_class_accuracy(pred, truth, num_classes);
    accs.push_back(acc);
    per_class.push_back(pc.accuracy);
    rows += run + "," + acc_str(acc);
    for (Index k = 0; k < pc.accuracy.size(); ++k) rows += "," + acc_str(pc.accuracy(k));
    rows += "\n";
    std::cout << "run " << run << ": accuracy " << acc_str(acc) << "\n";
  }

  std::string csv = "run,accuracy";
  for (int k = 0; k < num_classes; ++k) csv += ",class_" + std::to_string(k);
  csv += "\n" + rows;
  if (runs.size() > 1) {
    const MeanStd ms = mean_std(accs);
    std::string mean_row = "mean," + acc_str(ms.mean);
    std::string std_row = "std," + acc_str(ms.std);
    for (int k = 0; k < num_classes; ++k) {
      std::vector<double> v;
      for (const Vector& pc : per_class) {
        if (!std::isnan(pc(k))) v.push_back(pc(k));
      }
      const MeanStd c = mean_std(v);
      mean_row += "," + (v.empty() ? std::string() : acc_str(c.mean));
      std_row += "," + (v.empty() ? std::string() : acc_str(c.std));
    }
    csv += mean_row + "\n" + std_row + "\n";
    std::cout << "accuracy " << acc_str(ms.mean) << " +/- " << acc_str(ms.std) << " over "
              << runs.size() << " runs\n";
  }

  Outputs out;
  out.add(args.report, csv);
  out.commit(common, sibling(args.report, ".manifest.json"), inputs, "", common.seed.value_or(0),
             started);
  return 0;
}

int progressive(const Common& common, const ProgressiveArgs& args) {
  const auto started = Clock::now();
  AdaptConfig cfg = load_config(common, args.config);
  const Checkpoint parent = Checkpoint::load(args.ckpt);
  const std::string source_path = args.source.empty() ? parent.text("source_path") : args.source;
  const std::string a_path = args.target_a.empty() ? parent.text("target_path") : args.target_a;

  DeployedModel model;
  model.result = load_result(parent);
  if (has_extractor(parent)) model.extractor = load_extractor(parent);
  if (parent.has_text("seed")) model.seed = std::stoull(parent.text("seed"));
  if (parent.has_text("config_hash")) model.config_hash = std::stoull(parent.text("config_hash"), nullptr, 16);
  const std::uint64_t digest_before = model.extractor ? extractor_digest(*model.extractor) : 0;

  const DomainDataset source_raw = read_dataset(source_path);
  if (!source_raw.has_labels()) throw ParameterError("'" + source_path + "' carries no labels");
  const DomainDataset a_raw = read_dataset(a_path);
  const DomainDataset b_raw = read_dataset(args.target_b);
  const DomainDataset source{features_for(parent, source_raw), source_raw.labels, "source",
                             source_raw.num_classes};
  const Matrix za = features_for(parent, a_raw);
  const Matrix zb = features_for(parent, b_raw);

  const ProgressiveResult pr = progressive_adapt(model, source, za, zb, cfg);
  const std::uint64_t digest_after = model.extractor ? extractor_digest(*model.extractor) : 0;
  if (digest_before != digest_after) throw NumericalError("extractor changed during progressive run");

  auto accuracy_on = [](const std::string& labels_path, const Labels& pred) {
    if (labels_path.empty()) return std::numeric_limits<double>::quiet_NaN();
    return accuracy(pred, load_labels(labels_path, static_cast<Index>(pred.size())));
  };
  const std::string a_tag = fs::path(a_path).stem().string();
  const std::string b_tag = fs::path(args.target_b).stem().string();
  std::string report = "stage,domain,accuracy,condition_number\n";
  report += "deployed," + a_tag + "," + acc_str(accuracy_on(args.labels_a, pr.pseudo_labels)) + "," +
            condition_str(model.result) + "\n";
  const double deployed_b = accuracy_on(args.labels_b, model.predict(zb).labels);
  report += "deployed," + b_tag + "," + acc_str(deployed_b) + "," + condition_str(model.result) + "\n";
  const double progressive_b = accuracy_on(args.labels_b, predict_target(pr.adapt, zb).labels);
  report += "progressive," + b_tag + "," + acc_str(progressive_b) + "," + condition_str(pr.adapt) + "\n";

  Checkpoint ck;
  ck.put_text("kind", "progressive");
  ck.put_text("config", cfg.to_text());
  ck.put_text("config_hash", to_hex(cfg.hash()));
  ck.put_text("seed", std::to_string(cfg.seed));
  ck.put_text("parent_digest", file_digest(args.ckpt));
  ck.put_text("source_path", source_path);
  ck.put_text("target_a_path", a_path);
  ck.put_text("target_path", args.target_b);
  ck.put_text("features_precomputed", model.extractor ? "false" : "true");
  ck.put_text("pool_rows", std::to_string(pr.pool.size()));
  if (model.extractor) {
    store_extractor(ck, *model.extractor);
    ck.put_text("omega.digest", to_hex(digest_after));
  }
  store_result(ck, pr.adapt);

  Outputs out;
  out.add(args.out, ck.encode());
  out.add(sibling(args.out, ".phi_trace.csv"), trace_csv(pr.adapt.trace));
  out.add(sibling(args.out, ".chain.csv"), report);
  out.commit(common, sibling(args.out, ".manifest.json"),
             {args.ckpt, source_path, a_path, args.target_b, args.config, args.labels_a, args.labels_b},
             to_hex(cfg.hash()), cfg.seed, started);
  std::cout << "pool " << pr.pool.size() << " rows (" << source.size() << " source, "
            << pr.kept_a_rows.size() << " pseudo-labeled)\n";
  print_result_summary(pr.adapt);
  if (!std::isnan(progressive_b)) {
    std::cout << "domain B accuracy: deployed " << acc_str(deployed_b) << ", progressive "
              << acc_str(progressive_b) << "\n";
  }
  if (model.extractor) std::cout << "extractor digest " << to_hex(digest_after) << " unchanged\n";
  return 0;
}

int sweep(const Common& common, const SweepArgs& args) {
  const auto started = Clock::now();
  AdaptConfig base = load_config(common, args.config);
  if (!args.mode.empty()) base.mode = parse_adapt_mode(args.mode);
  if (args.param == "seed") throw ConfigError("sweep over seed is not supported; use --seeds");
  (void)base.get(args.param);  // rejects unknown keys before any work

  const DomainDataset source = read_dataset(args.source);
  const DomainDataset target = without_labels(read_dataset(args.target));
  if (!source.has_labels()) throw ParameterError("'" + args.source + "' carries no labels");
  const Labels truth = load_labels(args.labels, target.size());
  const std::vector<std::uint64_t> seeds =
      args.seeds.empty() ? std::vector<std::uint64_t>{base.seed} : args.seeds;

  std::string csv = "param,value,mean_accuracy,std_accuracy,num_seeds\n";
  for (const std::string& value : args.values) {
    std::vector<double> accs;
    for (std::uint64_t s : seeds) {
      AdaptConfig cfg = base;
      cfg.set(args.param, value);
      cfg.seed = s;
      cfg.validate();
      const AdaptResult res = subalign::adapt(source, target.features, cfg);
      accs.push_back(accuracy(predict_target(res, target.features).labels, truth));
    }
    const MeanStd ms = mean_std(accs);
    csv += args.param + "," + value + "," + acc_str(ms.mean) + "," + acc_str(ms.std) + "," +
           std::to_string(seeds.size()) + "\n";
    std::cout << args.param << " = " << value << ": " << acc_str(ms.mean) << " +/- "
              << acc_str(ms.std) << "\n";
  }

  Outputs out;
  out.add(args.report, csv);
  out.commit(common, sibling(args.report, ".manifest.json"),
             {args.source, args.target, args.labels, args.config}, to_hex(base.hash()), base.seed,
             started);
  return 0;
}

int validate(const Common&, const ValidateArgs& args) {
  const std::vector<std::byte> bytes = read_file_bytes(args.path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "SAC1", 4) == 0) {
    const Checkpoint ck = Checkpoint::decode(bytes);
    std::cout << "ok SAC1 tensors=" << ck.tensors().size() << " fields=" << ck.texts().size()
              << "\n";
    return 0;
  }
  const SafInfo info = validate_features_file(args.path);
  std::cout << "ok SAF1 n=" << info.rows << " D=" << info.cols
            << " labels=" << (info.has_labels ? "yes" : "no") << " K=" << info.num_classes
            << " checksum=" << to_hex(info.checksum) << "\n";
  return 0;
}

}  // namespace subalign::cli
