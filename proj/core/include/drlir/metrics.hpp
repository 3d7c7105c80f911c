#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "drlir/actor_critic.hpp"
#include "drlir/ann_forest.hpp"
#include "drlir/environment.hpp"
#include "drlir/training.hpp"

namespace drlir {

/// Σ of ratings that reach `threshold` (others count 0), divided by the list
/// length. On the 1–5 scale this lies in [0, 5].
double precision_at_n(std::span<const double> ratings, double threshold = kPositiveThreshold);

/// Conventional fraction of the list rated at or above `threshold`.
double precision_fraction(std::span<const double> ratings, double threshold = kPositiveThreshold);

/// DCG with gain = rating and discount log2(rank + 1), normalized by the DCG
/// of the same ratings sorted descending; 0 when that ideal DCG is 0.
double ndcg_at_n(std::span<const double> ratings);

struct UserMetrics {
  UserId user = 0;
  std::size_t lists = 0;
  double precision_at_n = 0.0;
  double precision_frac = 0.0;
  double diversity_at_n = 0.0;
  double ndcg_at_n = 0.0;
};

struct EvalReport {
  std::vector<UserMetrics> users;
  UserMetrics aggregate;  // means over users
  std::string config_hash;
  std::uint64_t seed = 0;
  bool use_pe = true;
  std::size_t top_n = kDefaultTopN;
  int steps = 0;

  /// "# key=value" metadata lines, then "metric,user,value" rows and one
  /// "metric,all,value" aggregate row per metric.
  void write_csv(std::ostream& out) const;
};

/// Produces the list shown to `user` in `state`.
using ListPolicy = std::function<std::vector<ItemRow>(UserRow user, const UserState& state)>;

/// Greedy (noise-free) agent policy: actor proto-action then diversified
/// retrieval, excluding the state's items unless `allow_repeats`.
ListPolicy agent_policy(const AgentNets& agent, const EmbeddingModel& model, const Forest& forest,
                        const TrainConfig& config);

/// Rolls `policy` for config.eval_steps steps from each test user's last n
/// training positives and scores every list. Held-out test ratings replace
/// PMF predictions where they exist. Metrics are averaged per step within a
/// user, then across users in ascending user-id order.
EvalReport evaluate(const ListPolicy& policy, const DatasetSplit& data, const EmbeddingModel& model,
                    const TrainConfig& config);
EvalReport evaluate(const AgentNets& agent, const DatasetSplit& data, const EmbeddingModel& model,
                    const Forest& forest, const TrainConfig& config);

}  // namespace drlir
