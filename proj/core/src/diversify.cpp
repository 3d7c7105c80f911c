#include "drlir/diversify.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "drlir/error.hpp"

namespace drlir {

CandidateSet::CandidateSet(std::vector<Candidate> items) : items_(std::move(items)) {
  std::sort(items_.begin(), items_.end(), [](const Candidate& a, const Candidate& b) {
    if (a.angular_distance != b.angular_distance) return a.angular_distance < b.angular_distance;
    return a.item < b.item;
  });
  std::vector<ItemRow> rows;
  rows.reserve(items_.size());
  for (const auto& c : items_) rows.push_back(c.item);
  std::sort(rows.begin(), rows.end());
  if (std::adjacent_find(rows.begin(), rows.end()) != rows.end()) {
    throw ValidationError("candidate set contains duplicate items");
  }
  if (!items_.empty()) {
    const auto m = items_.front().vector.size();
    for (const auto& c : items_) {
      if (c.vector.size() != m) throw ValidationError("candidate vectors differ in width");
    }
  }
}

CandidateSet CandidateSet::from_neighbors(std::span<const Neighbor> neighbors,
                                          const Forest& forest) {
  std::vector<Candidate> items;
  items.reserve(neighbors.size());
  for (const auto& n : neighbors) {
    auto v = forest.item(n.item);
    items.push_back({n.item, Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())),
                     n.distance});
  }
  return CandidateSet(std::move(items));
}

std::vector<ItemRow> RecommendationList::rows() const {
  std::vector<ItemRow> out;
  out.reserve(items.size());
  for (const auto& r : items) out.push_back(r.item);
  return out;
}

namespace {

// 1 − cos with the zero-vector convention, from precomputed norms.
double dissimilarity(const Candidate& a, double na, const Candidate& b, double nb) {
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - std::clamp(a.vector.dot(b.vector) / (na * nb), -1.0, 1.0);
}

}  // namespace

std::vector<double> tde_scores(const CandidateSet& candidates) {
  const std::size_t n = candidates.size();
  if (n < 2) throw ValidationError("TDE needs at least two candidates");
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = candidates[i].vector.norm();
  std::vector<double> scores(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) scores[i] += dissimilarity(candidates[i], norms[i], candidates[j], norms[j]);
    }
  }
  return scores;
}

double tde_score(std::size_t i, const CandidateSet& candidates) {
  if (candidates.size() < 2) throw ValidationError("TDE needs at least two candidates");
  if (i >= candidates.size()) throw LookupError("candidate index out of range");
  const double ni = candidates[i].vector.norm();
  double score = 0.0;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (j != i) score += dissimilarity(candidates[i], ni, candidates[j], candidates[j].vector.norm());
  }
  return score;
}

RecommendationList diversify(const CandidateSet& candidates, std::size_t top_n) {
  RecommendationList list;
  if (top_n > candidates.size()) {
    spdlog::debug("diversify: N={} exceeds |C|={}, returning all candidates", top_n,
                  candidates.size());
    top_n = candidates.size();
  }
  if (candidates.size() < 2) {
    for (const auto& c : candidates) list.items.push_back({c.item, 0.0, c.angular_distance});
    return list;
  }
  const auto scores = tde_scores(candidates);
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (candidates[a].angular_distance != candidates[b].angular_distance) {
      return candidates[a].angular_distance < candidates[b].angular_distance;
    }
    return candidates[a].item < candidates[b].item;
  });
  for (std::size_t r = 0; r < top_n; ++r) {
    const auto& c = candidates[order[r]];
    list.items.push_back({c.item, scores[order[r]], c.angular_distance});
  }
  return list;
}

RecommendationList recommend(std::span<const double> proto_action, const Forest& forest,
                             std::size_t k, std::size_t top_n,
                             const std::unordered_set<ItemRow>& exclude,
                             std::size_t search_budget) {
  auto survivors = [&](std::size_t query_k) {
    auto found = forest.query(proto_action, query_k, search_budget);
    std::erase_if(found, [&](const Neighbor& n) { return exclude.contains(n.item); });
    if (found.size() > k) found.resize(k);
    return found;
  };
  auto found = survivors(k);
  if (found.size() < top_n && k < forest.size()) {
    found = survivors(2 * k);
  }
  if (found.size() < top_n) {
    spdlog::warn("recommend: only {} candidate(s) left after exclusion (wanted {})",
                 found.size(), top_n);
  }
  return diversify(CandidateSet::from_neighbors(found, forest), top_n);
}

}  // namespace drlir
