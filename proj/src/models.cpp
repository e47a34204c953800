// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#include "subalign/models.hpp"

#include <cmath>
#include <string>

#include "subalign/errors.hpp"
#include "subalign/xxhash.hpp"

namespace subalign {
namespace {

void check_input(Index got, Index want, const char* op) {
  if (got != want) {
    throw ParameterError(std::string(op) + ": input has " + std::to_string(got) +
                         " columns, expected " + std::to_string(want));
  }
}

}  // namespace

ClassifierParams ClassifierParams::zeros(Index dim, Index classes) {
  if (dim < 1 || classes < 1) throw ParameterError("classifier needs D >= 1 and K >= 1");
  return {Matrix::Zero(dim, classes), RowVector::Zero(classes)};
}

std::vector<ParamView> ClassifierParams::views() { return {view(weight), view(bias)}; }

std::vector<ConstParamView> ClassifierParams::views() const {
  return {view(weight), view(bias)};
}

Matrix classifier_logits(const ClassifierParams& psi, const Matrix& z) {
  check_input(z.cols(), psi.input_dim(), "classifier_forward");
  Matrix out = z * psi.weight;
  out.rowwise() += psi.bias;
  return out;
}

Matrix classifier_forward(const ClassifierParams& psi, const Matrix& z) {
  return softmax_rows(classifier_logits(psi, z));
}

ClassifierGrad classifier_backward(const Matrix& z, const Matrix& grad_logits) {
  if (z.rows() != grad_logits.rows()) {
    throw ParameterError("classifier_backward: row counts differ");
  }
  return {z.transpose() * grad_logits, grad_logits.colwise().sum()};
}

Matrix classifier_input_grad(const ClassifierParams& psi, const Matrix& grad_logits) {
  return grad_logits * psi.weight.transpose();
}

std::vector<ParamView> ExtractorParams::views() {
  std::vector<ParamView> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(view(weights[l]));
    out.push_back(view(biases[l]));
  }
  return out;
}

std::vector<ConstParamView> ExtractorParams::views() const {
  std::vector<ConstParamView> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(view(weights[l]));
    out.push_back(view(biases[l]));
  }
  return out;
}

ExtractorParams init_extractor(Index input_dim, const std::vector<Index>& hidden,
                               Index output_dim, Rng& rng) {
  std::vector<Index> widths{input_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(output_dim);
  for (Index w : widths) {
    if (w < 1) throw ParameterError("init_extractor: layer widths must be positive");
  }
  ExtractorParams out;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const Index fan_in = widths[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(fan_in, widths[l + 1]);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
    out.weights.push_back(std::move(w));
    out.biases.push_back(RowVector::Zero(widths[l + 1]));
  }
  return out;
}

Matrix extractor_forward(const ExtractorParams& omega, const Matrix& x) {
  ExtractorCache cache;
  return extractor_forward(omega, x, cache);
}

Matrix extractor_forward(const ExtractorParams& omega, const Matrix& x, ExtractorCache& cache) {
  if (omega.num_layers() == 0) throw ParameterError("extractor has no layers");
  check_input(x.cols(), omega.input_dim(), "extractor_forward");
  cache.inputs.clear();
  cache.pre.clear();
  Matrix h = x;
  for (std::size_t l = 0; l < omega.num_layers(); ++l) {
    cache.inputs.push_back(h);
    Matrix a = h * omega.weights[l];
    a.rowwise() += omega.biases[l];
    cache.pre.push_back(a);
    if (l + 1 < omega.num_layers()) {
      h = a.cwiseMax(0.0);
    } else {
      h = std::move(a);
    }
  }
  return h;
}

ExtractorGrad extractor_backward(const ExtractorParams& omega, const ExtractorCache& cache,
                                 const Matrix& grad_out) {
  const std::size_t layers = omega.num_layers();
  if (cache.inputs.size() != layers) throw ParameterError("extractor_backward: stale cache");
  ExtractorGrad g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  Matrix delta = grad_out;
  for (std::size_t l = layers; l-- > 0;) {
    if (l + 1 < layers) {
      // ReLU derivative, taken as 0 at the kink.
      delta = delta.cwiseProduct((cache.pre[l].array() > 0.0).cast<double>().matrix());
    }
    g.weights[l] = cache.inputs[l].transpose() * delta;
    g.biases[l] = delta.colwise().sum();
    if (l > 0) delta = delta * omega.weights[l].transpose();
  }
  return g;
}

std::uint64_t extractor_digest(const ExtractorParams& omega) {
  Xxh64 h;
  for (std::size_t l = 0; l < omega.num_layers(); ++l) {
    const std::int64_t shape[2] = {omega.weights[l].rows(), omega.weights[l].cols()};
    h.update(shape, sizeof shape);
    h.update(omega.weights[l].data(), sizeof(double) * omega.weights[l].size());
    h.update(omega.biases[l].data(), sizeof(double) * omega.biases[l].size());
  }
  return h.digest();
}

OptimizerKind parse_optimizer_kind(std::string_view s) {
  if (s == "sgd" || s == "sgd-momentum") return OptimizerKind::sgd_momentum;
  if (s == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(s) + "' (expected sgd or adam)");
}

const char* to_string(OptimizerKind kind) {
  return kind == OptimizerKind::adam ? "adam" : "sgd";
}

Optimizer::Optimizer(OptimizerConfig cfg) : cfg_(cfg) {
  if (!(cfg_.lr >= 0.0) || !std::isfinite(cfg_.lr)) {
    throw ParameterError("optimizer learning rate must be finite and >= 0");
  }
}

void Optimizer::step(const std::vector<ParamView>& params,
                     const std::vector<ConstParamView>& grads) {
  if (params.size() != grads.size()) {
    throw ParameterError("Optimizer::step: " + std::to_string(params.size()) +
                         " parameters but " + std::to_string(grads.size()) + " gradients");
  }
  if (t_ == 0) {
    m_.clear();
    v_.clear();
    for (const auto& p : params) {
      m_.emplace_back(static_cast<std::size_t>(p.size), 0.0);
      if (cfg_.kind == OptimizerKind::adam) v_.emplace_back(static_cast<std::size_t>(p.size), 0.0);
    }
  } else if (params.size() != m_.size()) {
    throw ParameterError("Optimizer::step: parameter list changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size != grads[i].size ||
        static_cast<std::size_t>(params[i].size) != m_[i].size()) {
      throw ParameterError("Optimizer::step: gradient " + std::to_string(i) +
                           " is not shaped like its parameter");
    }
  }
  ++t_;

  if (cfg_.kind == OptimizerKind::sgd_momentum) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      double* p = params[i].data;
      const double* g = grads[i].data;
      std::vector<double>& v = m_[i];
      for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = cfg_.momentum * v[j] + g[j];
        p[j] -= cfg_.lr * v[j];
      }
    }
    return;
  }

  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i].data;
    const double* g = grads[i].data;
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (std::size_t j = 0; j < m.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      p[j] -= cfg_.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg_.eps);
    }
  }
}

}  // namespace subalign
