#include "drlir/environment.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "drlir/error.hpp"

namespace drlir {

void RatingOracle::add_known(const HistoryMap& histories) {
  for (const auto& [user, history] : histories) {
    if (!model_->users().contains(user)) continue;
    const UserRow u = model_->users().row(user);
    for (const auto& e : history.events) {
      if (model_->items().contains(e.item_id)) {
        add_known(u, model_->items().row(e.item_id), e.rating);
      }
    }
  }
}

void RatingOracle::add_known(UserRow user, ItemRow item, double rating) {
  known_[key(user, item)] = clamp_rating(rating);
}

double RatingOracle::rating(UserRow user, ItemRow item) const {
  if (!known_.empty()) {
    auto it = known_.find(key(user, item));
    if (it != known_.end()) return it->second;
  }
  return model_->predict_rating(user, item);
}

double ild(std::span<const ItemRow> items, const EmbeddingModel& model) {
  const std::size_t n = items.size();
  if (n < 2) {
    spdlog::warn("ild: list of {} item(s) has no pairs, diversity is 0", n);
    return 0.0;
  }
  const int m = model.width();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms[i] = Eigen::Map<const Eigen::VectorXd>(model.item_row(items[i]).data(), m).norm();
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Map<const Eigen::VectorXd> a(model.item_row(items[i]).data(), m);
    for (std::size_t j = i + 1; j < n; ++j) {
      double cos = 0.0;
      if (norms[i] > 0.0 && norms[j] > 0.0) {
        Eigen::Map<const Eigen::VectorXd> b(model.item_row(items[j]).data(), m);
        cos = std::clamp(a.dot(b) / (norms[i] * norms[j]), -1.0, 1.0);
      }
      sum += (1.0 - cos) / 2.0;
    }
  }
  return 2.0 * sum / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double rating_avg(std::span<const ItemRow> items, UserRow user, const RatingOracle& oracle) {
  if (items.empty()) throw ValidationError("rating_avg: empty list");
  double sum = 0.0;
  for (ItemRow i : items) sum += oracle.rating(user, i);
  return sum / static_cast<double>(items.size());
}

double reward(std::span<const ItemRow> items, UserRow user, const RatingOracle& oracle,
              double lambda) {
  return ild(items, oracle.model()) * rating_avg(items, user, oracle) - lambda;
}

StepOutcome step(UserRow user, const UserState& state, std::span<const ItemRow> list,
                 const RatingOracle& oracle, double lambda, double positive_threshold) {
  if (list.empty()) throw ValidationError("step: empty recommendation list");
  StepOutcome out;
  out.ratings.reserve(list.size());
  double sum = 0.0;
  for (ItemRow item : list) {
    const double r = oracle.rating(user, item);
    out.ratings.push_back(r);
    sum += r;
    if (r >= positive_threshold) out.positives.push_back(item);
  }
  out.rating_avg = sum / static_cast<double>(list.size());
  out.ild = list.size() < 2 ? 0.0 : ild(list, oracle.model());
  out.reward = out.ild * out.rating_avg - lambda;
  constexpr double kSlack = 1e-9;
  if (!(out.reward >= -lambda - kSlack && out.reward <= kMaxRating - lambda + kSlack)) {
    throw std::logic_error("reward " + std::to_string(out.reward) + " outside [-lambda, 5-lambda]");
  }
  out.next_state = update_state(state, out.positives);
  return out;
}

void write_step_log(std::ostream& out, std::span<const StepLogRow> rows) {
  out << "episode,step,user,reward,ild,rating_avg,n_positives\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.episode << ',' << r.step << ',' << r.user << ',' << r.reward << ',' << r.ild << ','
        << r.rating_avg << ',' << r.n_positives << '\n';
  }
}

}  // namespace drlir
