// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "subalign/core.hpp"
#include "subalign/rng.hpp"

namespace subalign {

/// Mutable view of a parameter tensor's storage, used by the optimizers.
struct ParamView {
  double* data;
  Index size;
};

struct ConstParamView {
  const double* data;
  Index size;
};

template <class Derived>
ParamView view(Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), m.size()};
}

template <class Derived>
ConstParamView view(const Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), m.size()};
}

/// Linear softmax head: probabilities = softmax(z * weight + bias).
struct ClassifierParams {
  Matrix weight;   // D x K
  RowVector bias;  // K

  static ClassifierParams zeros(Index dim, Index classes);

  Index input_dim() const { return weight.rows(); }
  Index num_classes() const { return weight.cols(); }

  std::vector<ParamView> views();
  std::vector<ConstParamView> views() const;
};

using ClassifierGrad = ClassifierParams;

Matrix classifier_logits(const ClassifierParams& psi, const Matrix& z);
Matrix classifier_forward(const ClassifierParams& psi, const Matrix& z);

/// Parameter gradient of a loss given its gradient w.r.t. the logits.
ClassifierGrad classifier_backward(const Matrix& z, const Matrix& grad_logits);

/// Gradient w.r.t. the classifier input z.
Matrix classifier_input_grad(const ClassifierParams& psi, const Matrix& grad_logits);

/// Multilayer perceptron with ReLU on every hidden layer and a linear output.
struct ExtractorParams {
  std::vector<Matrix> weights;    // layer l: in_l x out_l
  std::vector<RowVector> biases;  // layer l: out_l

  Index input_dim() const { return weights.empty() ? 0 : weights.front().rows(); }
  Index output_dim() const { return weights.empty() ? 0 : weights.back().cols(); }
  std::size_t num_layers() const { return weights.size(); }

  std::vector<ParamView> views();
  std::vector<ConstParamView> views() const;
};

using ExtractorGrad = ExtractorParams;

/// Layer widths input -> hidden... -> output, weights uniform in
/// [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
ExtractorParams init_extractor(Index input_dim, const std::vector<Index>& hidden,
                               Index output_dim, Rng& rng);

/// Forward pass intermediates kept for backpropagation.
struct ExtractorCache {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
};

Matrix extractor_forward(const ExtractorParams& omega, const Matrix& x);
Matrix extractor_forward(const ExtractorParams& omega, const Matrix& x, ExtractorCache& cache);
ExtractorGrad extractor_backward(const ExtractorParams& omega, const ExtractorCache& cache,
                                 const Matrix& grad_out);

/// 64-bit digest over the layer shapes and parameter bytes.
std::uint64_t extractor_digest(const ExtractorParams& omega);

enum class OptimizerKind { sgd_momentum, adam };

OptimizerKind parse_optimizer_kind(std::string_view s);
const char* to_string(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd_momentum;
  double lr = 1e-4;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// SGD with momentum (v <- m v + g; p <- p - lr v) or Adam with bias
/// correction. Moment buffers are created on the first step and bound to the
/// parameter list by position; later steps must pass the same shapes.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg);

  void step(const std::vector<ParamView>& params, const std::vector<ConstParamView>& grads);

  const OptimizerConfig& config() const { return cfg_; }
  std::int64_t steps() const { return t_; }

 private:
  OptimizerConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace subalign
