// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#include "subalign/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "subalign/errors.hpp"
#include "subalign/xxhash.hpp"

namespace subalign {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a real number, got '" + v + "'");
  }
  return out;
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Field {
  std::function<void(AdaptConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const AdaptConfig&)> get;
};

Field real(double AdaptConfig::*m) {
  return {[m](AdaptConfig& c, const std::string& k, const std::string& v) {
            c.*m = parse_double(k, v);
          },
          [m](const AdaptConfig& c) { return fmt_double(c.*m); }};
}

Field count(Index AdaptConfig::*m) {
  return {[m](AdaptConfig& c, const std::string& k, const std::string& v) {
            c.*m = parse_int(k, v);
          },
          [m](const AdaptConfig& c) { return std::to_string(c.*m); }};
}

Field flag(bool AdaptConfig::*m) {
  return {[m](AdaptConfig& c, const std::string& k, const std::string& v) {
            c.*m = parse_bool(k, v);
          },
          [m](const AdaptConfig& c) { return std::string(c.*m ? "true" : "false"); }};
}

Field optimizer(OptimizerKind AdaptConfig::*m) {
  return {[m](AdaptConfig& c, const std::string&, const std::string& v) {
            c.*m = parse_optimizer_kind(v);
          },
          [m](const AdaptConfig& c) { return std::string(to_string(c.*m)); }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"mode",
       {[](AdaptConfig& c, const std::string&, const std::string& v) {
          c.mode = parse_adapt_mode(v);
        },
        [](const AdaptConfig& c) { return std::string(to_string(c.mode)); }}},
      {"subspace_dim", count(&AdaptConfig::subspace_dim)},
      {"center", flag(&AdaptConfig::center)},
      {"lambda_c", real(&AdaptConfig::lambda_c)},
      {"lambda_cb", real(&AdaptConfig::lambda_cb)},
      {"gamma_c", real(&AdaptConfig::gamma_c)},
      {"gamma_cb", real(&AdaptConfig::gamma_cb)},
      {"n_iter", count(&AdaptConfig::n_iter)},
      {"t1", count(&AdaptConfig::t1)},
      {"t2", count(&AdaptConfig::t2)},
      {"convergence_tol", real(&AdaptConfig::convergence_tol)},
      {"split_fraction", real(&AdaptConfig::split_fraction)},
      {"target_fraction", real(&AdaptConfig::target_fraction)},
      {"seed",
       {[](AdaptConfig& c, const std::string& k, const std::string& v) {
          std::uint64_t out = 0;
          const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
          if (ec != std::errc() || p != v.data() + v.size()) {
            throw ConfigError(k + ": expected an unsigned integer, got '" + v + "'");
          }
          c.seed = out;
        },
        [](const AdaptConfig& c) { return std::to_string(c.seed); }}},
      {"classifier_optimizer", optimizer(&AdaptConfig::classifier_optimizer)},
      {"classifier_lr", real(&AdaptConfig::classifier_lr)},
      {"classifier_momentum", real(&AdaptConfig::classifier_momentum)},
      {"alignment_optimizer", optimizer(&AdaptConfig::alignment_optimizer)},
      {"alignment_lr", real(&AdaptConfig::alignment_lr)},
      {"alignment_momentum", real(&AdaptConfig::alignment_momentum)},
      {"init_optimizer", optimizer(&AdaptConfig::init_optimizer)},
      {"init_lr", real(&AdaptConfig::init_lr)},
      {"init_steps", count(&AdaptConfig::init_steps)},
      {"partial_da", flag(&AdaptConfig::partial_da)},
      {"tau", real(&AdaptConfig::tau)},
      {"epochs", count(&AdaptConfig::epochs)},
      {"tafe_optimizer", optimizer(&AdaptConfig::tafe_optimizer)},
      {"tafe_lr", real(&AdaptConfig::tafe_lr)},
      {"tafe_momentum", real(&AdaptConfig::tafe_momentum)},
      {"batch_source", count(&AdaptConfig::batch_source)},
      {"batch_target", count(&AdaptConfig::batch_target)},
      {"hidden_widths",
       {[](AdaptConfig& c, const std::string& k, const std::string& v) {
          std::vector<Index> widths;
          std::stringstream ss(v);
          std::string item;
          while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) widths.push_back(parse_int(k, item));
          }
          c.hidden_widths = std::move(widths);
        },
        [](const AdaptConfig& c) {
          std::string out;
          for (std::size_t i = 0; i < c.hidden_widths.size(); ++i) {
            if (i > 0) out += ",";
            out += std::to_string(c.hidden_widths[i]);
          }
          return out;
        }}},
      {"feature_dim", count(&AdaptConfig::feature_dim)},
      {"refit_pool_subspace", flag(&AdaptConfig::refit_pool_subspace)},
      {"warm_start", flag(&AdaptConfig::warm_start)},
      {"min_pseudo_prob", real(&AdaptConfig::min_pseudo_prob)},
  };
  return table;
}

const Field& find_field(const std::string& key) {
  for (const auto& [name, f] : fields()) {
    if (name == key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

OptimizerConfig make_opt(OptimizerKind kind, double lr, double momentum) {
  OptimizerConfig o;
  o.kind = kind;
  o.lr = lr;
  o.momentum = momentum;
  return o;
}

}  // namespace

AdaptMode parse_adapt_mode(std::string_view s) {
  if (s == "none") return AdaptMode::none;
  if (s == "primary-only") return AdaptMode::primary_only;
  if (s == "independent") return AdaptMode::independent;
  if (s == "joint") return AdaptMode::joint;
  if (s == "alternating") return AdaptMode::alternating;
  throw ConfigError("unknown mode '" + std::string(s) +
                    "' (expected none, primary-only, independent, joint or alternating)");
}

const char* to_string(AdaptMode mode) {
  switch (mode) {
    case AdaptMode::none: return "none";
    case AdaptMode::primary_only: return "primary-only";
    case AdaptMode::independent: return "independent";
    case AdaptMode::joint: return "joint";
    case AdaptMode::alternating: return "alternating";
  }
  return "unknown";
}

OptimizerConfig AdaptConfig::classifier_opt() const {
  return make_opt(classifier_optimizer, classifier_lr, classifier_momentum);
}

OptimizerConfig AdaptConfig::alignment_opt() const {
  return make_opt(alignment_optimizer, alignment_lr, alignment_momentum);
}

OptimizerConfig AdaptConfig::init_opt() const { return make_opt(init_optimizer, init_lr, 0.9); }

OptimizerConfig AdaptConfig::tafe_opt() const {
  return make_opt(tafe_optimizer, tafe_lr, tafe_momentum);
}

void AdaptConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ParameterError(msg);
  };
  require(subspace_dim >= 0, "subspace_dim must be >= 0 (0 selects the default)");
  require(lambda_c >= 0 && lambda_cb >= 0 && gamma_c >= 0 && gamma_cb >= 0,
          "loss weights must be non-negative");
  require(n_iter >= 1 && t1 >= 1 && t2 >= 1, "n_iter, t1 and t2 must be >= 1");
  require(convergence_tol >= 0, "convergence_tol must be >= 0");
  require(split_fraction > 0 && split_fraction < 1, "split_fraction must lie in (0, 1)");
  require(target_fraction > 0 && target_fraction <= 1, "target_fraction must lie in (0, 1]");
  require(classifier_lr >= 0 && alignment_lr >= 0 && init_lr >= 0 && tafe_lr >= 0,
          "learning rates must be >= 0");
  require(classifier_momentum >= 0 && classifier_momentum < 1 && alignment_momentum >= 0 &&
              alignment_momentum < 1 && tafe_momentum >= 0 && tafe_momentum < 1,
          "momentum must lie in [0, 1)");
  require(init_steps >= 0, "init_steps must be >= 0");
  require(tau >= 0, "tau must be >= 0");
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_source >= 1 && batch_target >= 1, "batch sizes must be >= 1");
  require(feature_dim >= 1, "feature_dim must be >= 1");
  for (Index w : hidden_widths) require(w >= 1, "hidden_widths entries must be >= 1");
  require(min_pseudo_prob >= 0 && min_pseudo_prob < 1, "min_pseudo_prob must lie in [0, 1)");
}

void AdaptConfig::set(const std::string& key, const std::string& value) {
  find_field(key).set(*this, key, value);
}

std::string AdaptConfig::get(const std::string& key) const { return find_field(key).get(*this); }

const std::vector<std::string>& AdaptConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, f] : fields()) out.push_back(name);
    return out;
  }();
  return names;
}

std::string AdaptConfig::to_text() const {
  std::string out;
  for (const auto& [name, f] : fields()) out += name + " = " + f.get(*this) + "\n";
  return out;
}

std::uint64_t AdaptConfig::hash() const { return xxh64(to_text()); }

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

AdaptConfig parse_adapt_config(std::string_view text) {
  AdaptConfig cfg;
  for (const auto& [k, v] : parse_key_values(text)) cfg.set(k, v);
  return cfg;
}

AdaptConfig load_adapt_config(const std::string& path) {
  return parse_adapt_config(read_text_file(path));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace subalign
