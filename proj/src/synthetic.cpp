// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#include "subalign/synthetic.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>

#include "subalign/config.hpp"
#include "subalign/errors.hpp"
#include "subalign/rng.hpp"

namespace subalign {
namespace {

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a real number, got '" + v + "'");
  }
  return out;
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
  }
  return out;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Matrix rotation(Index dim, Index k, Index offset, double angle_deg) {
  const double th = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(th);
  const double s = std::sin(th);
  Matrix r = Matrix::Identity(dim, dim);
  for (Index i = 0; i < k; ++i) {
    const Index j = offset * k + i;
    r(i, i) = c;
    r(j, j) = c;
    r(j, i) = s;
    r(i, j) = -s;
  }
  return r;
}

DomainDataset sample(const Matrix& means, const std::vector<int>& classes, Index per_class,
                     double noise, int num_classes, const std::string& tag, Rng& rng) {
  DomainDataset ds;
  ds.domain_tag = tag;
  ds.num_classes = num_classes;
  const Index dim = means.cols();
  ds.features.resize(static_cast<Index>(classes.size()) * per_class, dim);
  Labels labels;
  labels.reserve(static_cast<std::size_t>(ds.features.rows()));
  Index row = 0;
  for (int c : classes) {
    for (Index i = 0; i < per_class; ++i, ++row) {
      for (Index j = 0; j < dim; ++j) ds.features(row, j) = means(c, j) + noise * rng.normal();
      labels.push_back(c);
    }
  }
  ds.labels = std::move(labels);
  return ds;
}

}  // namespace

void SyntheticSpec::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ParameterError("synthetic spec: " + msg);
  };
  require(num_classes >= 2, "num_classes must be >= 2");
  require(intrinsic_dim >= 1 && intrinsic_dim <= ambient_dim,
          "intrinsic_dim must lie in [1, ambient_dim]");
  require(samples_per_class >= 1, "samples_per_class must be >= 1");
  require(noise >= 0.0, "noise must be >= 0");
  require(class_separation >= 0.0, "class_separation must be >= 0");
  require(spectral_decay > 0.0, "spectral_decay must be > 0");
  std::set<std::string> names;
  for (const TargetShift& t : targets) {
    require(!t.name.empty() && t.name != "source", "target names must be non-empty and not 'source'");
    require(names.insert(t.name).second, "duplicate target '" + t.name + "'");
    require(t.angle_deg >= 0.0 && t.angle_deg < 180.0, t.name + ".angle_deg must lie in [0, 180)");
    require(t.translation >= 0.0, t.name + ".translation must be >= 0");
    require(t.scale > 0.0, t.name + ".scale must be > 0");
    require(t.plane_offset >= 1 && (t.plane_offset + 1) * intrinsic_dim <= ambient_dim,
            t.name + ".plane_offset must satisfy (plane_offset + 1) * intrinsic_dim <= ambient_dim");
    for (int c : t.classes) {
      require(c >= 0 && c < num_classes, t.name + ".classes entry out of range");
    }
  }
}

SyntheticSpec parse_synthetic_spec(std::string_view text) {
  const auto kv = parse_key_values(text);
  SyntheticSpec spec;
  if (const auto it = kv.find("targets"); it != kv.end()) {
    spec.targets.clear();
    Index offset = 1;
    for (const std::string& name : split_list(it->second)) {
      spec.targets.push_back({name, 45.0, 2.0, 1.0, offset++, {}});
    }
  }
  for (const auto& [key, value] : kv) {
    if (key == "targets") continue;
    if (key == "num_classes") spec.num_classes = to_int<int>(key, value);
    else if (key == "ambient_dim") spec.ambient_dim = to_int<Index>(key, value);
    else if (key == "intrinsic_dim") spec.intrinsic_dim = to_int<Index>(key, value);
    else if (key == "samples_per_class") spec.samples_per_class = to_int<Index>(key, value);
    else if (key == "class_separation") spec.class_separation = to_real(key, value);
    else if (key == "spectral_decay") spec.spectral_decay = to_real(key, value);
    else if (key == "noise") spec.noise = to_real(key, value);
    else if (key == "seed") spec.seed = to_int<std::uint64_t>(key, value);
    else {
      const auto dot = key.find('.');
      TargetShift* t = nullptr;
      if (dot != std::string::npos) {
        for (TargetShift& cand : spec.targets) {
          if (cand.name == key.substr(0, dot)) t = &cand;
        }
      }
      if (t == nullptr) throw ConfigError("unknown synthetic spec key '" + key + "'");
      const std::string field = key.substr(dot + 1);
      if (field == "angle_deg") t->angle_deg = to_real(key, value);
      else if (field == "translation") t->translation = to_real(key, value);
      else if (field == "scale") t->scale = to_real(key, value);
      else if (field == "plane_offset") t->plane_offset = to_int<Index>(key, value);
      else if (field == "classes") {
        t->classes.clear();
        for (const std::string& c : split_list(value)) t->classes.push_back(to_int<int>(key, c));
      } else {
        throw ConfigError("unknown synthetic spec key '" + key + "'");
      }
    }
  }
  spec.validate();
  return spec;
}

std::string to_text(const SyntheticSpec& spec) {
  std::string out;
  out += "num_classes = " + std::to_string(spec.num_classes) + "\n";
  out += "ambient_dim = " + std::to_string(spec.ambient_dim) + "\n";
  out += "intrinsic_dim = " + std::to_string(spec.intrinsic_dim) + "\n";
  out += "samples_per_class = " + std::to_string(spec.samples_per_class) + "\n";
  out += "class_separation = " + fmt(spec.class_separation) + "\n";
  out += "spectral_decay = " + fmt(spec.spectral_decay) + "\n";
  out += "noise = " + fmt(spec.noise) + "\n";
  out += "seed = " + std::to_string(spec.seed) + "\n";
  std::string names;
  for (const TargetShift& t : spec.targets) names += (names.empty() ? "" : ",") + t.name;
  out += "targets = " + names + "\n";
  for (const TargetShift& t : spec.targets) {
    out += t.name + ".angle_deg = " + fmt(t.angle_deg) + "\n";
    out += t.name + ".translation = " + fmt(t.translation) + "\n";
    out += t.name + ".scale = " + fmt(t.scale) + "\n";
    out += t.name + ".plane_offset = " + std::to_string(t.plane_offset) + "\n";
    std::string cls;
    for (int c : t.classes) cls += (cls.empty() ? "" : ",") + std::to_string(c);
    out += t.name + ".classes = " + cls + "\n";
  }
  return out;
}

SyntheticBenchmark generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const Index dim = spec.ambient_dim;
  const Index k = spec.intrinsic_dim;
  const int num_classes = spec.num_classes;
  const Rng root(spec.seed);

  SyntheticBenchmark out;
  Rng mean_rng = root.fork("means");
  out.source_means = Matrix::Zero(num_classes, dim);
  for (int c = 0; c < num_classes; ++c) {
    for (Index j = 0; j < k; ++j) {
      out.source_means(c, j) = mean_rng.normal() * spec.class_separation *
                               std::pow(spec.spectral_decay, static_cast<double>(j));
    }
  }

  std::vector<int> all(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) all[static_cast<std::size_t>(c)] = c;

  Rng src_rng = root.fork("source");
  out.source = sample(out.source_means, all, spec.samples_per_class, spec.noise, num_classes,
                      "source", src_rng);

  for (const TargetShift& t : spec.targets) {
    Rng rng = root.fork("target:" + t.name);
    const Matrix r = rotation(dim, k, t.plane_offset, t.angle_deg);
    Vector dir = r.leftCols(k) * rng.normal_matrix(k, 1).col(0);
    const double norm = dir.norm();
    if (norm > 0.0) dir /= norm;
    Matrix means = t.scale * out.source_means * r.transpose();
    means.rowwise() += t.translation * dir.transpose();
    out.targets.push_back(sample(means, t.classes.empty() ? all : t.classes,
                                 spec.samples_per_class, spec.noise, num_classes, t.name, rng));
    out.target_means.push_back(std::move(means));
    out.rotations.push_back(r);
  }
  return out;
}

SyntheticSpec default_benchmark_spec(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.targets.resize(1);
  return spec;
}

SyntheticSpec partial_benchmark_spec(std::uint64_t seed) {
  SyntheticSpec spec = default_benchmark_spec(seed);
  spec.targets[0].classes = {0, 1, 2, 3};
  return spec;
}

}  // namespace subalign
