#include "drlir/mlp.hpp"

#include <cmath>
#include <string>

#include "drlir/error.hpp"

namespace drlir {
namespace {

void activate(Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::identity:
      break;
    case Activation::relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::tanh:
      z = z.array().tanh().matrix();
      break;
  }
}

// Multiplies `grad` in place by the activation derivative expressed through
// the activated output `y`.
void activation_backward(Eigen::MatrixXd& grad, const Eigen::MatrixXd& y, Activation a) {
  switch (a) {
    case Activation::identity:
      break;
    case Activation::relu:
      grad = (y.array() > 0.0).select(grad, 0.0);
      break;
    case Activation::tanh:
      grad.array() *= 1.0 - y.array().square();
      break;
  }
}

}  // namespace

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool MlpParams::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

bool MlpParams::same_shape(const MlpParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& a = layers[i];
    const auto& b = other.layers[i];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
        a.activation != b.activation) {
      return false;
    }
  }
  return true;
}

MlpParams make_mlp(std::span<const int> dims, std::span<const Activation> activations,
                   std::mt19937_64& rng, double last_layer_scale) {
  if (dims.size() < 2 || activations.size() != dims.size() - 1) {
    throw ConfigError("make_mlp: need one activation per layer");
  }
  MlpParams params;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] <= 0 || dims[l + 1] <= 0) throw ConfigError("make_mlp: layer widths must be > 0");
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    std::uniform_real_distribution<double> init(-bound, bound);
    DenseLayer layer;
    layer.weight.resize(dims[l + 1], dims[l]);
    layer.bias.resize(dims[l + 1]);
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = init(rng);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = init(rng);
    layer.activation = activations[l];
    params.layers.push_back(std::move(layer));
  }
  params.layers.back().weight *= last_layer_scale;
  params.layers.back().bias *= last_layer_scale;
  return params;
}

MlpGradient MlpGradient::zeros_like(const MlpParams& params) {
  MlpGradient g;
  for (const auto& l : params.layers) {
    g.weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

double MlpGradient::squared_norm() const {
  double s = 0.0;
  for (const auto& w : weight) s += w.squaredNorm();
  for (const auto& b : bias) s += b.squaredNorm();
  return s;
}

bool MlpGradient::all_finite() const {
  for (const auto& w : weight) {
    if (!w.allFinite()) return false;
  }
  for (const auto& b : bias) {
    if (!b.allFinite()) return false;
  }
  return true;
}

MlpGradient& MlpGradient::operator*=(double s) {
  for (auto& w : weight) w *= s;
  for (auto& b : bias) b *= s;
  return *this;
}

Eigen::MatrixXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x, MlpTape* tape) {
  if (params.layers.empty()) throw ConfigError("mlp_forward: empty network");
  if (x.rows() != params.input_dim()) {
    throw ValidationError("mlp_forward: input has " + std::to_string(x.rows()) +
                          " rows, network expects " + std::to_string(params.input_dim()));
  }
  if (tape) {
    tape->inputs.clear();
    tape->outputs.clear();
  }
  Eigen::MatrixXd h = x;
  for (const auto& layer : params.layers) {
    Eigen::MatrixXd z = layer.weight * h;
    z.colwise() += layer.bias;
    activate(z, layer.activation);
    if (tape) tape->inputs.push_back(std::move(h));
    h = std::move(z);
    if (tape) tape->outputs.push_back(h);
  }
  return h;
}

Eigen::MatrixXd mlp_backward(const MlpParams& params, const MlpTape& tape,
                             const Eigen::MatrixXd& grad_out, MlpGradient* grads) {
  if (tape.outputs.size() != params.layers.size()) {
    throw ValidationError("mlp_backward: tape does not match network");
  }
  Eigen::MatrixXd g = grad_out;
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const auto& layer = params.layers[l];
    activation_backward(g, tape.outputs[l], layer.activation);
    if (grads) {
      grads->weight[l].noalias() += g * tape.inputs[l].transpose();
      grads->bias[l] += g.rowwise().sum();
    }
    g = layer.weight.transpose() * g;
  }
  return g;
}

Optimizer::Optimizer(const OptimizerConfig& config, const MlpParams& shape)
    : config_(config) {
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (config.kind == OptimizerKind::adam) {
    first_moment_ = MlpGradient::zeros_like(shape);
    second_moment_ = MlpGradient::zeros_like(shape);
  }
}

void Optimizer::step(MlpParams& params, const MlpGradient& grad) {
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::sgd) {
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      params.layers[l].weight -= lr * grad.weight[l];
      params.layers[l].bias -= lr * grad.bias[l];
    }
    return;
  }
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config_.epsilon);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weight, grad.weight[l], first_moment_.weight[l], second_moment_.weight[l]);
    update(params.layers[l].bias, grad.bias[l], first_moment_.bias[l], second_moment_.bias[l]);
  }
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

}  // namespace drlir
