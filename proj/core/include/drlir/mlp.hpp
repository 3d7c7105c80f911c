#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace drlir {

enum class Activation : std::uint8_t { identity = 0, relu = 1, tanh = 2 };

struct DenseLayer {
  Eigen::MatrixXd weight;  // out × in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::identity;
};

/// A feed-forward stack of dense layers.
struct MlpParams {
  std::vector<DenseLayer> layers;

  Eigen::Index input_dim() const { return layers.front().weight.cols(); }
  Eigen::Index output_dim() const { return layers.back().weight.rows(); }
  std::size_t parameter_count() const;
  bool all_finite() const;
  bool same_shape(const MlpParams& other) const;
};

/// Uniform(±1/√fan_in) init for weights and biases; the last layer is
/// additionally multiplied by `last_layer_scale`.
MlpParams make_mlp(std::span<const int> dims, std::span<const Activation> activations,
                   std::mt19937_64& rng, double last_layer_scale = 1.0);

/// Per-layer inputs and activated outputs of one batched forward pass.
struct MlpTape {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> outputs;
};

struct MlpGradient {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;

  static MlpGradient zeros_like(const MlpParams& params);
  double squared_norm() const;
  bool all_finite() const;
  MlpGradient& operator*=(double s);
};

/// Columns of `x` are samples. Returns output_dim × batch.
Eigen::MatrixXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x,
                            MlpTape* tape = nullptr);

/// Backpropagates `grad_out` (∂L/∂output, output_dim × batch) through a
/// recorded forward pass. Parameter gradients, summed over the batch, are
/// added into `grads` when non-null. Returns ∂L/∂input.
Eigen::MatrixXd mlp_backward(const MlpParams& params, const MlpTape& tape,
                             const Eigen::MatrixXd& grad_out, MlpGradient* grads);

/// Visits every parameter as (layer, is_bias, flat index, value&) in a fixed
/// order; used by soft updates and finite-difference checks.
template <typename Fn>
void for_each_parameter(MlpParams& params, Fn&& fn) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& layer = params.layers[l];
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) fn(l, false, i, layer.weight.data()[i]);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) fn(l, true, i, layer.bias.data()[i]);
  }
}

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Descent optimizer: step() moves parameters against `grad`.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& config, const MlpParams& shape);

  void step(MlpParams& params, const MlpGradient& grad);
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  MlpGradient first_moment_;
  MlpGradient second_moment_;
  long steps_ = 0;
};

OptimizerKind parse_optimizer_kind(std::string_view name);

}  // namespace drlir
