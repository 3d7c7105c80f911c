#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "drlir/mlp.hpp"

namespace drlir {

struct Transition {
  Eigen::VectorXd state;       // encoded, n·m
  Eigen::VectorXd action;      // proto-action, m
  double reward = 0.0;
  Eigen::VectorXd next_state;  // encoded, n·m
};

struct NetworkShape {
  int state_dim = 1000;
  int action_dim = 100;
  std::vector<int> actor_hidden{256, 128};
  std::vector<int> critic_hidden{256, 128};
};

/// state → ReLU hidden layers → Tanh proto-action. The output layer starts
/// scaled by 1e-3 so initial actions sit near zero.
MlpParams make_actor(const NetworkShape& shape, std::mt19937_64& rng);
/// [state; action] → ReLU hidden layers → linear scalar Q.
MlpParams make_critic(const NetworkShape& shape, std::mt19937_64& rng);

Eigen::VectorXd actor_forward(const MlpParams& actor, const Eigen::VectorXd& state);
double critic_forward(const MlpParams& critic, const Eigen::VectorXd& state,
                      const Eigen::VectorXd& action);
/// ∂Q/∂a at (state, action).
Eigen::VectorXd critic_grad_wrt_action(const MlpParams& critic, const Eigen::VectorXd& state,
                                       const Eigen::VectorXd& action);

/// y_i = r_i + γ·Q'(s_{i+1}, μ'(s_{i+1})), target networks only.
std::vector<double> td_targets(std::span<const Transition> batch, const MlpParams& target_actor,
                               const MlpParams& target_critic, double gamma);

struct LossAndGradient {
  double value = 0.0;
  MlpGradient grad;
};

/// Mean squared TD error (1/N)Σ(y_i − Q(s_i, a_i))² and its parameter gradient.
LossAndGradient critic_loss_gradient(std::span<const Transition> batch, const MlpParams& critic,
                                     std::span<const double> targets);

/// J = (1/N)Σ Q(s_i, μ(s_i)) and ∂J/∂θ_actor through the chain
/// ∇_a Q · ∇_θ μ, with the critic held fixed.
LossAndGradient actor_objective_gradient(std::span<const Transition> batch, const MlpParams& actor,
                                         const MlpParams& critic);

/// One descent step on the TD loss; returns the loss before the step.
double critic_update(std::span<const Transition> batch, MlpParams& critic,
                     std::span<const double> targets, Optimizer& optimizer);

/// One ascent step on J; returns ‖∂J/∂θ‖.
double actor_update(std::span<const Transition> batch, MlpParams& actor, const MlpParams& critic,
                    Optimizer& optimizer);

/// target ← τ·online + (1 − τ)·target.
void soft_update(const MlpParams& online, MlpParams& target, double tau);

/// Fixed-capacity FIFO of transitions with seeded uniform sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed);

  void push(Transition t);
  /// Distinct transitions drawn uniformly; nullopt while fewer than
  /// `batch_size` are stored.
  std::optional<std::vector<Transition>> sample(std::size_t batch_size);
  std::vector<std::size_t> sample_indices(std::size_t batch_size);

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// i-th oldest stored transition.
  const Transition& at(std::size_t i) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // slot of the oldest item once full
  std::vector<Transition> items_;
  std::mt19937_64 rng_;
};

struct AgentNets {
  MlpParams actor;
  MlpParams critic;
  MlpParams target_actor;
  MlpParams target_critic;
  std::uint64_t step = 0;
  bool use_pe = true;

  static AgentNets initialize(const NetworkShape& shape, std::uint64_t seed);

  /// Bit-exact round trip: 64-bit float parameters of all four networks.
  void save(const std::filesystem::path& path) const;
  static AgentNets load(const std::filesystem::path& path);
};

}  // namespace drlir
