#include "drlir/actor_critic.hpp"

#include <cmath>
#include <string>

#include "drlir/error.hpp"

namespace drlir {
namespace {

constexpr double kActorOutputScale = 1e-3;

struct StackedBatch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::MatrixXd next_states;
  Eigen::RowVectorXd rewards;
};

StackedBatch stack(std::span<const Transition> batch) {
  if (batch.empty()) throw ValidationError("empty transition batch");
  const auto b = static_cast<Eigen::Index>(batch.size());
  const auto sd = batch.front().state.size();
  const auto ad = batch.front().action.size();
  StackedBatch out{Eigen::MatrixXd(sd, b), Eigen::MatrixXd(ad, b), Eigen::MatrixXd(sd, b),
                   Eigen::RowVectorXd(b)};
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& t = batch[static_cast<std::size_t>(i)];
    if (t.state.size() != sd || t.next_state.size() != sd || t.action.size() != ad) {
      throw ValidationError("transitions in a batch differ in shape");
    }
    out.states.col(i) = t.state;
    out.actions.col(i) = t.action;
    out.next_states.col(i) = t.next_state;
    out.rewards[i] = t.reward;
  }
  return out;
}

Eigen::MatrixXd concat_rows(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd x(top.rows() + bottom.rows(), top.cols());
  x << top, bottom;
  return x;
}

void check_critic_input(const MlpParams& critic, Eigen::Index state_dim, Eigen::Index action_dim) {
  if (critic.output_dim() != 1 || critic.input_dim() != state_dim + action_dim) {
    throw ValidationError("critic expects input " + std::to_string(critic.input_dim()) +
                          ", got state " + std::to_string(state_dim) + " + action " +
                          std::to_string(action_dim));
  }
}

std::vector<int> layer_dims(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

}  // namespace

MlpParams make_actor(const NetworkShape& shape, std::mt19937_64& rng) {
  const auto dims = layer_dims(shape.state_dim, shape.actor_hidden, shape.action_dim);
  std::vector<Activation> acts(dims.size() - 1, Activation::relu);
  acts.back() = Activation::tanh;
  return make_mlp(dims, acts, rng, kActorOutputScale);
}

MlpParams make_critic(const NetworkShape& shape, std::mt19937_64& rng) {
  const auto dims =
      layer_dims(shape.state_dim + shape.action_dim, shape.critic_hidden, 1);
  std::vector<Activation> acts(dims.size() - 1, Activation::relu);
  acts.back() = Activation::identity;
  return make_mlp(dims, acts, rng);
}

Eigen::VectorXd actor_forward(const MlpParams& actor, const Eigen::VectorXd& state) {
  return mlp_forward(actor, state);
}

double critic_forward(const MlpParams& critic, const Eigen::VectorXd& state,
                      const Eigen::VectorXd& action) {
  check_critic_input(critic, state.size(), action.size());
  return mlp_forward(critic, concat_rows(state, action))(0, 0);
}

Eigen::VectorXd critic_grad_wrt_action(const MlpParams& critic, const Eigen::VectorXd& state,
                                       const Eigen::VectorXd& action) {
  check_critic_input(critic, state.size(), action.size());
  MlpTape tape;
  mlp_forward(critic, concat_rows(state, action), &tape);
  const Eigen::MatrixXd grad_in = mlp_backward(critic, tape, Eigen::MatrixXd::Ones(1, 1), nullptr);
  return grad_in.col(0).tail(action.size());
}

std::vector<double> td_targets(std::span<const Transition> batch, const MlpParams& target_actor,
                               const MlpParams& target_critic, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in [0, 1]");
  const auto b = stack(batch);
  const Eigen::MatrixXd next_actions = mlp_forward(target_actor, b.next_states);
  check_critic_input(target_critic, b.next_states.rows(), next_actions.rows());
  const Eigen::MatrixXd q_next =
      mlp_forward(target_critic, concat_rows(b.next_states, next_actions));
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = b.rewards[static_cast<Eigen::Index>(i)] + gamma * q_next(0, static_cast<Eigen::Index>(i));
  }
  return y;
}

LossAndGradient critic_loss_gradient(std::span<const Transition> batch, const MlpParams& critic,
                                     std::span<const double> targets) {
  if (targets.size() != batch.size()) throw ValidationError("targets and batch differ in size");
  const auto b = stack(batch);
  check_critic_input(critic, b.states.rows(), b.actions.rows());
  MlpTape tape;
  const Eigen::MatrixXd q = mlp_forward(critic, concat_rows(b.states, b.actions), &tape);
  const auto n = static_cast<double>(batch.size());
  Eigen::MatrixXd diff(1, q.cols());
  for (Eigen::Index i = 0; i < q.cols(); ++i) diff(0, i) = q(0, i) - targets[static_cast<std::size_t>(i)];
  LossAndGradient out{diff.squaredNorm() / n, MlpGradient::zeros_like(critic)};
  mlp_backward(critic, tape, (2.0 / n) * diff, &out.grad);
  return out;
}

LossAndGradient actor_objective_gradient(std::span<const Transition> batch, const MlpParams& actor,
                                         const MlpParams& critic) {
  const auto b = stack(batch);
  MlpTape actor_tape;
  const Eigen::MatrixXd actions = mlp_forward(actor, b.states, &actor_tape);
  check_critic_input(critic, b.states.rows(), actions.rows());
  MlpTape critic_tape;
  const Eigen::MatrixXd q = mlp_forward(critic, concat_rows(b.states, actions), &critic_tape);
  const auto n = static_cast<double>(batch.size());
  const Eigen::MatrixXd dq = Eigen::MatrixXd::Constant(1, q.cols(), 1.0 / n);
  const Eigen::MatrixXd grad_in = mlp_backward(critic, critic_tape, dq, nullptr);
  LossAndGradient out{q.sum() / n, MlpGradient::zeros_like(actor)};
  mlp_backward(actor, actor_tape, grad_in.bottomRows(actions.rows()), &out.grad);
  return out;
}

double critic_update(std::span<const Transition> batch, MlpParams& critic,
                     std::span<const double> targets, Optimizer& optimizer) {
  auto lg = critic_loss_gradient(batch, critic, targets);
  if (!std::isfinite(lg.value) || !lg.grad.all_finite()) {
    throw DivergenceError("critic loss is not finite (" + std::to_string(lg.value) + ")");
  }
  optimizer.step(critic, lg.grad);
  return lg.value;
}

double actor_update(std::span<const Transition> batch, MlpParams& actor, const MlpParams& critic,
                    Optimizer& optimizer) {
  auto lg = actor_objective_gradient(batch, actor, critic);
  if (!std::isfinite(lg.value) || !lg.grad.all_finite()) {
    throw DivergenceError("actor objective is not finite (" + std::to_string(lg.value) + ")");
  }
  const double norm = std::sqrt(lg.grad.squared_norm());
  lg.grad *= -1.0;  // ascent
  optimizer.step(actor, lg.grad);
  return norm;
}

void soft_update(const MlpParams& online, MlpParams& target, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must be in (0, 1]");
  if (!online.same_shape(target)) throw ValidationError("soft_update: shape mismatch");
  for (std::size_t l = 0; l < online.layers.size(); ++l) {
    auto& t = target.layers[l];
    const auto& o = online.layers[l];
    if (tau == 1.0) {
      t.weight = o.weight;
      t.bias = o.bias;
      continue;
    }
    // Incremental form keeps online == target an exact fixed point.
    t.weight += tau * (o.weight - t.weight);
    t.bias += tau * (o.bias - t.bias);
  }
}

AgentNets AgentNets::initialize(const NetworkShape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  AgentNets nets;
  nets.actor = make_actor(shape, rng);
  nets.critic = make_critic(shape, rng);
  nets.target_actor = nets.actor;
  nets.target_critic = nets.critic;
  return nets;
}

}  // namespace drlir
