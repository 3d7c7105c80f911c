#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "drlir/ratings.hpp"

namespace drlir {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ItemRow = std::int32_t;
using UserRow = std::int32_t;

inline constexpr int kEmbeddingWidth = 100;
inline constexpr double kMinRating = 1.0;
inline constexpr double kMaxRating = 5.0;

/// Bijection between raw dataset ids and dense row indices.
class IdIndex {
 public:
  IdIndex() = default;
  explicit IdIndex(std::vector<std::int64_t> ids);

  /// Returns the row for `id`, appending it if unseen.
  std::int32_t insert(std::int64_t id);
  std::int32_t row(std::int64_t id) const;  // throws LookupError
  bool contains(std::int64_t id) const { return rows_.contains(id); }
  std::int64_t id(std::int32_t row) const { return ids_.at(static_cast<std::size_t>(row)); }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::int64_t>& ids() const { return ids_; }

 private:
  std::vector<std::int64_t> ids_;
  std::unordered_map<std::int64_t, std::int32_t> rows_;
};

struct PmfHyperparams {
  double learning_rate = 0.003;
  double l2_user = 0.05;
  double l2_item = 0.05;
  int epochs = 30;
  double init_scale = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Clamp onto the 1..5 star scale; NaN maps to the floor.
double clamp_rating(double raw);

class EmbeddingModel {
 public:
  EmbeddingModel(RowMatrix user_vectors, RowMatrix item_vectors, IdIndex users,
                 IdIndex items);

  int width() const { return static_cast<int>(item_vectors_.cols()); }
  std::size_t num_users() const { return users_.size(); }
  std::size_t num_items() const { return items_.size(); }

  const RowMatrix& user_vectors() const { return user_vectors_; }
  const RowMatrix& item_vectors() const { return item_vectors_; }
  const IdIndex& users() const { return users_; }
  const IdIndex& items() const { return items_; }

  double raw_score(UserRow user, ItemRow item) const;
  double predict_rating(UserRow user, ItemRow item) const {
    return clamp_rating(raw_score(user, item));
  }
  double predict_rating(UserId user, ItemId item) const;

  std::span<const double> item_vector(ItemId item) const;
  std::span<const double> item_row(ItemRow row) const;
  std::span<const double> user_row(UserRow row) const;

  /// Binary model plus `<path>.ids.json` holding the id maps.
  void save(const std::filesystem::path& path) const;
  static EmbeddingModel load(const std::filesystem::path& path);
  static std::filesystem::path id_map_path(const std::filesystem::path& path);

 private:
  RowMatrix user_vectors_;
  RowMatrix item_vectors_;
  IdIndex users_;
  IdIndex items_;
};

struct PmfTrainingLog {
  std::vector<double> epoch_loss;  // full objective after each epoch
};

/// Plain dot-product PMF with L2, fitted by SGD in a seeded shuffled order.
/// Rows are assigned in order of first appearance in `ratings`; stored
/// vectors are rounded to float precision so a saved model reloads exactly.
EmbeddingModel train_pmf(std::span<const RatingEvent> ratings, int width,
                         const PmfHyperparams& hp, PmfTrainingLog* log = nullptr);

/// Objective Σ (r − u·v)² + l2_user‖U‖² + l2_item‖V‖² over `ratings`.
double pmf_objective(const EmbeddingModel& model,
                     std::span<const RatingEvent> ratings, double l2_user,
                     double l2_item);

struct PmfObservationGradient {
  double loss = 0.0;
  Eigen::VectorXd user;
  Eigen::VectorXd item;
};

/// Exact gradient of (r − u·v)² + l2_user‖u‖² + l2_item‖v‖² for one
/// observation; the SGD step descends along this.
PmfObservationGradient pmf_observation_gradient(const Eigen::VectorXd& user,
                                                const Eigen::VectorXd& item,
                                                double rating, double l2_user,
                                                double l2_item);

}  // namespace drlir
