#include "drlir/user_state.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

#include "drlir/error.hpp"

namespace drlir {

UserState::UserState(std::vector<ItemRow> items) : items_(std::move(items)) {
  if (items_.empty()) throw ValidationError("user state must hold at least one item");
}

bool UserState::contains(ItemRow item) const {
  return std::find(items_.begin(), items_.end(), item) != items_.end();
}

Eigen::VectorXd positional_encoding(int pos, int d_model) {
  if (d_model <= 0 || d_model % 2 != 0) {
    throw ConfigError("positional encoding needs a positive even d_model, got " +
                      std::to_string(d_model));
  }
  if (pos < 1) throw ConfigError("positions are 1-based");
  Eigen::VectorXd pe(d_model);
  for (int i = 0; i < d_model / 2; ++i) {
    const double angle =
        pos / std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d_model));
    pe[2 * i] = std::sin(angle);
    pe[2 * i + 1] = std::cos(angle);
  }
  return pe;
}

Eigen::VectorXd encode_state(const UserState& state, const EmbeddingModel& model, bool use_pe) {
  const int m = model.width();
  const auto n = static_cast<Eigen::Index>(state.size());
  Eigen::VectorXd out(n * m);
  for (Eigen::Index pos = 0; pos < n; ++pos) {
    auto e = model.item_row(state.items()[static_cast<std::size_t>(pos)]);
    auto slice = out.segment(pos * m, m);
    slice = Eigen::Map<const Eigen::VectorXd>(e.data(), m);
    if (use_pe) slice += positional_encoding(static_cast<int>(pos) + 1, m);
  }
  return out;
}

UserState update_state(const UserState& state, std::span<const ItemRow> positives) {
  if (positives.empty()) return state;
  const std::size_t n = state.size();
  if (positives.size() > n) {
    spdlog::debug("update_state: {} positives exceed state size {}, keeping newest",
                  positives.size(), n);
    positives = positives.last(n);
  }
  std::vector<ItemRow> next(state.items().begin() + static_cast<std::ptrdiff_t>(positives.size()),
                            state.items().end());
  next.insert(next.end(), positives.begin(), positives.end());
  return UserState(std::move(next));
}

}  // namespace drlir
