#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "drlir/actor_critic.hpp"
#include "drlir/ann_forest.hpp"
#include "drlir/diversify.hpp"
#include "drlir/environment.hpp"
#include "drlir/ratings.hpp"
#include "drlir/user_state.hpp"

namespace drlir {

/// Agent and episode settings. Defaults reproduce the reference
/// configuration: N = 10, n = 10, |C| = 30, T ∈ [1, 10], 5 trees, λ = 1.8.
struct TrainConfig {
  std::size_t episodes = 5000;
  int max_steps = 10;           // T is drawn from [1, max_steps] per episode...
  int fixed_steps = 0;          // ...unless this is > 0
  double gamma = 0.9;
  double tau = 0.001;
  std::size_t batch_size = 64;
  std::size_t buffer_capacity = 100000;
  std::size_t warmup_batches = 10;  // updates start at warmup_batches·batch_size transitions
  std::size_t candidates = kDefaultCandidates;
  std::size_t top_n = kDefaultTopN;
  std::size_t state_size = kStateSize;
  std::size_t search_budget = 0;
  double lambda = kDefaultLambda;
  bool use_pe = true;
  bool exploration = true;
  double sigma0 = 0.2;
  double sigma_decay = 0.999;
  bool allow_repeats = false;
  OptimizerKind optimizer = OptimizerKind::sgd;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  std::vector<int> actor_hidden{256, 128};
  std::vector<int> critic_hidden{256, 128};
  int eval_steps = 10;
  std::size_t curve_window = 100;
  std::uint64_t seed = 0;

  void validate() const;
  /// Sets one field from its key=value spelling; ConfigError on unknown keys.
  void set(std::string_view key, std::string_view value);
  std::map<std::string, std::string> to_map() const;
  /// Fingerprint of every field except `use_pe`, so an ablation pair shares it.
  std::string hash() const;
  std::size_t warmup_size() const { return warmup_batches * batch_size; }
};

/// Flat "key = value" text, '#' comments. Unknown keys are errors.
TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base = {});
void save_train_config(const std::filesystem::path& path, const TrainConfig& config);

struct EpisodeStats {
  std::size_t episode = 0;
  UserId user = 0;
  std::size_t steps = 0;
  double total_reward = 0.0;
  double mean_reward = 0.0;
  double mean_ild = 0.0;
  double mean_rating = 0.0;
  double critic_loss = 0.0;      // mean over this episode's updates, NaN if none
  double actor_grad_norm = 0.0;  // likewise
  std::size_t updates = 0;
};

struct EvalSnapshot {
  std::size_t episode = 0;
  double precision_at_n = 0.0;
  double diversity_at_n = 0.0;
  double ndcg_at_n = 0.0;
};

struct TrainReport {
  std::vector<EpisodeStats> episodes;
  std::vector<EvalSnapshot> snapshots;
  std::vector<StepLogRow> steps;

  std::vector<double> mean_rewards() const;
  void write_csv(std::ostream& out) const;
  /// (episode, trailing moving average of mean reward).
  void write_learning_curve(std::ostream& out, std::size_t window) const;
};

/// Users that can start an episode: known to the model with at least n
/// training positives. The initial state is their first n positives.
struct EpisodeStart {
  UserId user = 0;
  UserRow row = 0;
  UserState initial_state;
};

std::vector<EpisodeStart> eligible_users(const HistoryMap& train, const EmbeddingModel& model,
                                         std::size_t state_size);

/// Uniform choice; ConfigError when `eligible` is empty.
const EpisodeStart& choose_episode_user(std::span<const EpisodeStart> eligible,
                                        std::mt19937_64& rng);

struct TrainHooks {
  std::function<void(const AgentNets&)> after_update;
  std::function<void(std::size_t episode, const AgentNets&, TrainReport&)> after_episode;
  /// Where to write the last good networks if training diverges.
  std::filesystem::path abort_checkpoint;
};

struct TrainResult {
  AgentNets nets;
  TrainReport report;
};

/// Deep deterministic policy gradient over the simulated user: per episode
/// pick a user and s_0; per step act (plus decaying Gaussian exploration),
/// build the diversified list, step the environment, store the transition,
/// and once the buffer is warm update critic, actor and both targets.
TrainResult train(const TrainConfig& config, const DatasetSplit& data, const EmbeddingModel& model,
                  const Forest& forest, const TrainHooks& hooks = {});

NetworkShape network_shape(const TrainConfig& config, int embedding_width);

}  // namespace drlir
