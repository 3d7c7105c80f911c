#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "drlir/embeddings.hpp"
#include "drlir/ratings.hpp"
#include "drlir/user_state.hpp"

namespace drlir {

inline constexpr double kDefaultLambda = 1.8;

/// Simulated ratings: known (user, item) ratings when registered, PMF
/// predictions clamped to [1, 5] otherwise.
class RatingOracle {
 public:
  explicit RatingOracle(const EmbeddingModel& model) : model_(&model) {}

  /// Registers every event whose user and item the model knows.
  void add_known(const HistoryMap& histories);
  void add_known(UserRow user, ItemRow item, double rating);
  std::size_t known_count() const { return known_.size(); }

  double rating(UserRow user, ItemRow item) const;
  const EmbeddingModel& model() const { return *model_; }

 private:
  static std::uint64_t key(UserRow u, ItemRow i) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
           static_cast<std::uint32_t>(i);
  }

  const EmbeddingModel* model_;
  std::unordered_map<std::uint64_t, double> known_;
};

/// Intra-list distance: mean over unordered pairs of (1 − cos)/2, in [0, 1].
/// Lists shorter than two have no pairs and score 0.
double ild(std::span<const ItemRow> items, const EmbeddingModel& model);

double rating_avg(std::span<const ItemRow> items, UserRow user, const RatingOracle& oracle);

/// ild · rating_avg − λ.
double reward(std::span<const ItemRow> items, UserRow user, const RatingOracle& oracle,
              double lambda = kDefaultLambda);

struct StepOutcome {
  std::vector<double> ratings;      // aligned with the recommended list
  std::vector<ItemRow> positives;   // rating ≥ threshold, list order
  double ild = 0.0;
  double rating_avg = 0.0;
  double reward = 0.0;
  UserState next_state;
};

/// Rates the list, keeps the positives in list order and advances the state.
/// The reward is checked against its [−λ, 5 − λ] bounds on every call.
StepOutcome step(UserRow user, const UserState& state, std::span<const ItemRow> list,
                 const RatingOracle& oracle, double lambda = kDefaultLambda,
                 double positive_threshold = kPositiveThreshold);

struct StepLogRow {
  std::size_t episode = 0;
  std::size_t step = 0;
  UserId user = 0;
  double reward = 0.0;
  double ild = 0.0;
  double rating_avg = 0.0;
  std::size_t n_positives = 0;
};

/// CSV "episode,step,user,reward,ild,rating_avg,n_positives".
void write_step_log(std::ostream& out, std::span<const StepLogRow> rows);

}  // namespace drlir
