#include "drlir/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <unordered_set>

#include "drlir/diversify.hpp"
#include "drlir/error.hpp"

namespace drlir {

double precision_at_n(std::span<const double> ratings, double threshold) {
  if (ratings.empty()) return 0.0;
  double sum = 0.0;
  for (double r : ratings) {
    if (r >= threshold) sum += r;
  }
  return sum / static_cast<double>(ratings.size());
}

double precision_fraction(std::span<const double> ratings, double threshold) {
  if (ratings.empty()) return 0.0;
  const auto hits = std::count_if(ratings.begin(), ratings.end(),
                                  [threshold](double r) { return r >= threshold; });
  return static_cast<double>(hits) / static_cast<double>(ratings.size());
}

double ndcg_at_n(std::span<const double> ratings) {
  auto dcg = [](std::span<const double> gains) {
    double s = 0.0;
    for (std::size_t i = 0; i < gains.size(); ++i) {
      s += gains[i] / std::log2(static_cast<double>(i) + 2.0);
    }
    return s;
  };
  std::vector<double> ideal(ratings.begin(), ratings.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double idcg = dcg(ideal);
  if (idcg <= 0.0) return 0.0;
  return std::min(1.0, dcg(ratings) / idcg);
}

void EvalReport::write_csv(std::ostream& out) const {
  out << "# config_hash=" << config_hash << '\n'
      << "# seed=" << seed << '\n'
      << "# use_pe=" << (use_pe ? "true" : "false") << '\n'
      << "# top_n=" << top_n << '\n'
      << "# steps=" << steps << '\n'
      << "# averaging=per-step-then-per-user\n"
      << "# users=" << users.size() << '\n';
  out << "metric,user,value\n";
  out << std::setprecision(17);
  const std::pair<const char*, double UserMetrics::*> metrics[] = {
      {"precision_at_n", &UserMetrics::precision_at_n},
      {"precision_frac", &UserMetrics::precision_frac},
      {"diversity_at_n", &UserMetrics::diversity_at_n},
      {"ndcg_at_n", &UserMetrics::ndcg_at_n},
  };
  for (const auto& [name, field] : metrics) {
    for (const auto& u : users) out << name << ',' << u.user << ',' << u.*field << '\n';
    out << name << ",all," << aggregate.*field << '\n';
  }
}

ListPolicy agent_policy(const AgentNets& agent, const EmbeddingModel& model, const Forest& forest,
                        const TrainConfig& config) {
  return [&agent, &model, &forest, config](UserRow, const UserState& state) {
    const Eigen::VectorXd action = actor_forward(agent.actor, encode_state(state, model, config.use_pe));
    std::unordered_set<ItemRow> exclude;
    if (!config.allow_repeats) exclude.insert(state.items().begin(), state.items().end());
    return recommend(action, forest, config.candidates, config.top_n, exclude,
                     config.search_budget).rows();
  };
}

EvalReport evaluate(const ListPolicy& policy, const DatasetSplit& data, const EmbeddingModel& model,
                    const TrainConfig& config) {
  config.validate();
  RatingOracle oracle(model);
  oracle.add_known(data.test);

  EvalReport report;
  report.config_hash = config.hash();
  report.seed = config.seed;
  report.use_pe = config.use_pe;
  report.top_n = config.top_n;
  report.steps = config.eval_steps;

  for (const auto& [user, test_history] : data.test) {
    auto train_it = data.train.find(user);
    if (train_it == data.train.end() || !model.users().contains(user)) continue;
    const auto& events = train_it->second.events;
    if (events.size() < config.state_size) continue;
    std::vector<ItemRow> items;
    for (auto it = events.end() - static_cast<std::ptrdiff_t>(config.state_size); it != events.end(); ++it) {
      if (!model.items().contains(it->item_id)) break;
      items.push_back(model.items().row(it->item_id));
    }
    if (items.size() != config.state_size) continue;

    const UserRow row = model.users().row(user);
    UserState state(std::move(items));
    UserMetrics m{user};
    for (int t = 0; t < config.eval_steps; ++t) {
      const auto list = policy(row, state);
      if (list.empty()) break;
      auto outcome = step(row, state, list, oracle, config.lambda);
      m.precision_at_n += precision_at_n(outcome.ratings);
      m.precision_frac += precision_fraction(outcome.ratings);
      m.diversity_at_n += outcome.ild;
      m.ndcg_at_n += ndcg_at_n(outcome.ratings);
      ++m.lists;
      state = std::move(outcome.next_state);
    }
    if (m.lists == 0) continue;
    const auto n = static_cast<double>(m.lists);
    m.precision_at_n /= n;
    m.precision_frac /= n;
    m.diversity_at_n /= n;
    m.ndcg_at_n /= n;
    report.users.push_back(m);
  }

  if (!report.users.empty()) {
    for (const auto& u : report.users) {
      report.aggregate.precision_at_n += u.precision_at_n;
      report.aggregate.precision_frac += u.precision_frac;
      report.aggregate.diversity_at_n += u.diversity_at_n;
      report.aggregate.ndcg_at_n += u.ndcg_at_n;
      report.aggregate.lists += u.lists;
    }
    const auto n = static_cast<double>(report.users.size());
    report.aggregate.precision_at_n /= n;
    report.aggregate.precision_frac /= n;
    report.aggregate.diversity_at_n /= n;
    report.aggregate.ndcg_at_n /= n;
  }
  return report;
}

EvalReport evaluate(const AgentNets& agent, const DatasetSplit& data, const EmbeddingModel& model,
                    const Forest& forest, const TrainConfig& config) {
  return evaluate(agent_policy(agent, model, forest, config), data, model, config);
}

}  // namespace drlir
