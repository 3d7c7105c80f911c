#include "drlir/training.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <unordered_set>

#include "drlir/error.hpp"

namespace drlir {
namespace {

// Independent engines per concern so that, e.g., turning exploration off
// does not shift the user sequence.
struct RngStreams {
  explicit RngStreams(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      0x5eedu};
    std::uint64_t s[4];
    std::uint32_t words[8];
    seq.generate(std::begin(words), std::end(words));
    for (int i = 0; i < 4; ++i) {
      s[i] = (static_cast<std::uint64_t>(words[2 * i]) << 32) | words[2 * i + 1];
    }
    init_seed = s[0];
    buffer_seed = s[1];
    episodes.seed(s[2]);
    noise.seed(s[3]);
  }
  std::uint64_t init_seed;
  std::uint64_t buffer_seed;
  std::mt19937_64 episodes;
  std::mt19937_64 noise;
};

double mean_or_nan(double sum, std::size_t n) {
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

}  // namespace

NetworkShape network_shape(const TrainConfig& config, int embedding_width) {
  NetworkShape shape;
  shape.state_dim = static_cast<int>(config.state_size) * embedding_width;
  shape.action_dim = embedding_width;
  shape.actor_hidden = config.actor_hidden;
  shape.critic_hidden = config.critic_hidden;
  return shape;
}

std::vector<EpisodeStart> eligible_users(const HistoryMap& train, const EmbeddingModel& model,
                                         std::size_t state_size) {
  std::vector<EpisodeStart> out;
  for (const auto& [user, history] : train) {
    if (history.events.size() < state_size || !model.users().contains(user)) continue;
    std::vector<ItemRow> items;
    items.reserve(state_size);
    for (std::size_t i = 0; i < state_size; ++i) {
      const auto item = history.events[i].item_id;
      if (!model.items().contains(item)) break;
      items.push_back(model.items().row(item));
    }
    if (items.size() != state_size) continue;
    out.push_back({user, model.users().row(user), UserState(std::move(items))});
  }
  return out;
}

const EpisodeStart& choose_episode_user(std::span<const EpisodeStart> eligible,
                                        std::mt19937_64& rng) {
  if (eligible.empty()) throw ConfigError("no eligible users to start an episode");
  std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
  return eligible[pick(rng)];
}

std::vector<double> TrainReport::mean_rewards() const {
  std::vector<double> out;
  out.reserve(episodes.size());
  for (const auto& e : episodes) out.push_back(e.mean_reward);
  return out;
}

void TrainReport::write_csv(std::ostream& out) const {
  out << "episode,user,steps,total_reward,mean_reward,mean_ild,mean_rating,critic_loss,"
         "actor_grad_norm,updates\n";
  out << std::setprecision(17);
  for (const auto& e : episodes) {
    out << e.episode << ',' << e.user << ',' << e.steps << ',' << e.total_reward << ','
        << e.mean_reward << ',' << e.mean_ild << ',' << e.mean_rating << ',' << e.critic_loss
        << ',' << e.actor_grad_norm << ',' << e.updates << '\n';
  }
}

void TrainReport::write_learning_curve(std::ostream& out, std::size_t window) const {
  window = std::max<std::size_t>(window, 1);
  out << "episode,moving_average_reward\n";
  out << std::setprecision(17);
  double sum = 0.0;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    sum += episodes[i].mean_reward;
    if (i >= window) sum -= episodes[i - window].mean_reward;
    const auto count = std::min(i + 1, window);
    out << episodes[i].episode << ',' << sum / static_cast<double>(count) << '\n';
  }
}

TrainResult train(const TrainConfig& config, const DatasetSplit& data, const EmbeddingModel& model,
                  const Forest& forest, const TrainHooks& hooks) {
  config.validate();
  if (forest.size() != model.num_items() || forest.width() != model.width()) {
    throw ValidationError("forest was not built over the model's item vectors");
  }
  RngStreams rng(config.seed);
  TrainResult result{AgentNets::initialize(network_shape(config, model.width()), rng.init_seed), {}};
  AgentNets& nets = result.nets;
  nets.use_pe = config.use_pe;
  TrainReport& report = result.report;
  if (config.episodes == 0) return result;

  const auto starts = eligible_users(data.train, model, config.state_size);
  if (starts.empty()) throw ConfigError("training split has no user with enough positives");

  RatingOracle oracle(model);
  ReplayBuffer buffer(config.buffer_capacity, rng.buffer_seed);
  Optimizer actor_opt({config.optimizer, config.actor_lr}, nets.actor);
  Optimizer critic_opt({config.optimizer, config.critic_lr}, nets.critic);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t warmup = std::max(config.warmup_size(), config.batch_size);
  const int max_t = config.fixed_steps > 0 ? config.fixed_steps : config.max_steps;

  for (std::size_t episode = 0; episode < config.episodes; ++episode) {
    const double sigma =
        config.exploration ? config.sigma0 * std::pow(config.sigma_decay, static_cast<double>(episode))
                           : 0.0;
    const auto& start = choose_episode_user(starts, rng.episodes);
    const int steps = config.fixed_steps > 0
                          ? config.fixed_steps
                          : std::uniform_int_distribution<int>(1, max_t)(rng.episodes);
    UserState state = start.initial_state;
    EpisodeStats stats{episode + 1, start.user};
    double ild_sum = 0.0, rating_sum = 0.0, loss_sum = 0.0, grad_sum = 0.0;

    for (int t = 0; t < steps; ++t) {
      Eigen::VectorXd s = encode_state(state, model, config.use_pe);
      Eigen::VectorXd action = actor_forward(nets.actor, s);
      if (sigma > 0.0) {
        for (Eigen::Index i = 0; i < action.size(); ++i) {
          action[i] = std::clamp(action[i] + sigma * gauss(rng.noise), -1.0, 1.0);
        }
      }
      std::unordered_set<ItemRow> exclude;
      if (!config.allow_repeats) exclude.insert(state.items().begin(), state.items().end());
      const auto list = recommend(action, forest, config.candidates, config.top_n, exclude,
                                  config.search_budget);
      if (list.empty()) {
        spdlog::warn("episode {}: no recommendable items left, ending episode", episode + 1);
        break;
      }
      const auto rows = list.rows();
      auto outcome = step(start.row, state, rows, oracle, config.lambda);
      Eigen::VectorXd s_next = encode_state(outcome.next_state, model, config.use_pe);
      buffer.push(Transition{std::move(s), std::move(action), outcome.reward, std::move(s_next)});

      ++stats.steps;
      stats.total_reward += outcome.reward;
      ild_sum += outcome.ild;
      rating_sum += outcome.rating_avg;
      report.steps.push_back(StepLogRow{episode + 1, static_cast<std::size_t>(t + 1), start.user,
                              outcome.reward, outcome.ild, outcome.rating_avg,
                              outcome.positives.size()});
      state = std::move(outcome.next_state);

      if (buffer.size() < warmup) continue;
      auto batch = buffer.sample(config.batch_size);
      if (!batch) continue;
      const MlpParams critic_before = nets.critic;
      try {
        const auto y = td_targets(*batch, nets.target_actor, nets.target_critic, config.gamma);
        loss_sum += critic_update(*batch, nets.critic, y, critic_opt);
        grad_sum += actor_update(*batch, nets.actor, nets.critic, actor_opt);
      } catch (const DivergenceError& e) {
        nets.critic = critic_before;
        if (!hooks.abort_checkpoint.empty()) nets.save(hooks.abort_checkpoint);
        throw DivergenceError("training aborted at update " + std::to_string(nets.step + 1) +
                              " (episode " + std::to_string(episode + 1) + "): " + e.what());
      }
      soft_update(nets.critic, nets.target_critic, config.tau);
      soft_update(nets.actor, nets.target_actor, config.tau);
      ++nets.step;
      ++stats.updates;
      if (hooks.after_update) hooks.after_update(nets);
    }

    stats.mean_reward = stats.steps ? stats.total_reward / static_cast<double>(stats.steps) : 0.0;
    stats.mean_ild = stats.steps ? ild_sum / static_cast<double>(stats.steps) : 0.0;
    stats.mean_rating = stats.steps ? rating_sum / static_cast<double>(stats.steps) : 0.0;
    stats.critic_loss = mean_or_nan(loss_sum, stats.updates);
    stats.actor_grad_norm = mean_or_nan(grad_sum, stats.updates);
    report.episodes.push_back(stats);
    if (hooks.after_episode) hooks.after_episode(episode + 1, nets, report);
  }
  return result;
}

}  // namespace drlir
