#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <unordered_set>
#include <vector>

#include "drlir/ann_forest.hpp"

namespace drlir {

inline constexpr std::size_t kDefaultCandidates = 30;  // |C|
inline constexpr std::size_t kDefaultTopN = 10;        // N

struct Candidate {
  ItemRow item = 0;
  Eigen::VectorXd vector;
  double angular_distance = 0.0;
};

/// Candidates kept in canonical order: ascending angular distance to the
/// proto-action, ties by item row. Duplicate items are rejected.
class CandidateSet {
 public:
  CandidateSet() = default;
  explicit CandidateSet(std::vector<Candidate> items);
  static CandidateSet from_neighbors(std::span<const Neighbor> neighbors, const Forest& forest);

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Candidate& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::vector<Candidate> items_;
};

struct RankedItem {
  ItemRow item = 0;
  double tde = 0.0;
  double angular_distance = 0.0;
};

struct RecommendationList {
  std::vector<RankedItem> items;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  std::vector<ItemRow> rows() const;
};

/// Total Diversity Effect of candidate `i`: Σ_{j≠i} (1 − cos(c_i, c_j)) over
/// the whole set. Cosine against a zero vector counts as 0.
double tde_score(std::size_t i, const CandidateSet& candidates);
std::vector<double> tde_scores(const CandidateSet& candidates);

/// Top-N candidates by descending TDE; ties by smaller angular distance, then
/// item row. N > |C| returns all of C. Sets smaller than two are returned
/// unranked with TDE 0.
RecommendationList diversify(const CandidateSet& candidates, std::size_t top_n);

/// Candidate retrieval plus TDE ranking for one proto-action. Excluded rows
/// are dropped from the k retrieved candidates; if fewer than N survive, k is
/// doubled once (the candidate set is still capped at k). search_budget is
/// passed through to Forest::query.
RecommendationList recommend(std::span<const double> proto_action, const Forest& forest,
                             std::size_t k, std::size_t top_n,
                             const std::unordered_set<ItemRow>& exclude = {},
                             std::size_t search_budget = 0);
inline RecommendationList recommend(const Eigen::VectorXd& proto_action, const Forest& forest,
                                    std::size_t k, std::size_t top_n,
                                    const std::unordered_set<ItemRow>& exclude = {},
                                    std::size_t search_budget = 0) {
  return recommend(std::span<const double>(proto_action.data(),
                                           static_cast<std::size_t>(proto_action.size())),
                   forest, k, top_n, exclude, search_budget);
}

}  // namespace drlir
