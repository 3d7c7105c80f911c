#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

#include "drlir/embeddings.hpp"

namespace drlir {

inline constexpr std::size_t kStateSize = 10;  // n

/// The latest n positive items of a user, oldest first.
class UserState {
 public:
  UserState() = default;
  explicit UserState(std::vector<ItemRow> items);

  std::size_t size() const { return items_.size(); }
  const std::vector<ItemRow>& items() const { return items_; }
  bool contains(ItemRow item) const;

  friend bool operator==(const UserState&, const UserState&) = default;

 private:
  std::vector<ItemRow> items_;
};

/// Sinusoidal encoding of a 1-based position, interleaved
/// [sin(pos/10000^(0/d)), cos(pos/10000^(0/d)), sin(pos/10000^(2/d)), ...].
/// Throws ConfigError for odd or non-positive d_model or pos < 1.
Eigen::VectorXd positional_encoding(int pos, int d_model);

/// Concatenation of each item's embedding (plus PE(pos) when `use_pe`),
/// oldest first; length n·m.
Eigen::VectorXd encode_state(const UserState& state, const EmbeddingModel& model, bool use_pe);

/// Drops the r oldest items and appends the r positives in order. r = 0
/// returns the state unchanged; r > n keeps only the newest n positives.
UserState update_state(const UserState& state, std::span<const ItemRow> positives);

}  // namespace drlir
