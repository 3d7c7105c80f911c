#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "drlir/embeddings.hpp"

namespace drlir {

inline constexpr int kDefaultTrees = 5;
inline constexpr int kDefaultLeafSize = 30;

/// Splitting hyperplane. `normal` is p1 − p2 for two sampled unit points and
/// `offset` puts the plane equidistant between them. A node whose sampled
/// splits all degenerated carries a zero normal (items were halved by index).
struct InternalNode {
  std::vector<double> normal;
  double offset = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
};

struct LeafNode {
  std::vector<ItemRow> items;
};

using TreeNode = std::variant<InternalNode, LeafNode>;

struct Tree {
  std::vector<TreeNode> nodes;
  std::int32_t root = 0;
};

struct ForestParams {
  int n_trees = kDefaultTrees;
  int leaf_size = kDefaultLeafSize;
  std::uint64_t seed = 0;
  bool parallel_build = false;
};

struct Neighbor {
  ItemRow item = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct QueryStats {
  std::size_t visited_nodes = 0;
  std::size_t candidates = 0;  // unique items scored
};

/// 1 − cos(a, b) in [0, 2]; 1 when either vector is zero.
double angular_distance(std::span<const double> a, std::span<const double> b);

/// Forest of random-hyperplane trees over a fixed item matrix. Splits are
/// computed on unit-normalized copies of the items, which leaves angular
/// neighbourhoods unchanged and makes the routing independent of item norms.
class Forest {
 public:
  static Forest build(std::shared_ptr<const RowMatrix> items, const ForestParams& params);

  /// Up to min(k, N) items ascending by (angular distance, index). The
  /// traversal pops nodes from one priority queue shared by all trees, keyed
  /// by the smallest plane margin along the path, and stops once
  /// max(k, search_budget) unique candidates are collected. search_budget 0
  /// means n_trees·k.
  std::vector<Neighbor> query(std::span<const double> q, std::size_t k,
                              std::size_t search_budget = 0,
                              QueryStats* stats = nullptr) const;

  std::size_t size() const { return static_cast<std::size_t>(items_->rows()); }
  int width() const { return static_cast<int>(items_->cols()); }
  int n_trees() const { return static_cast<int>(trees_.size()); }
  int leaf_size() const { return leaf_size_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Tree>& trees() const { return trees_; }
  const RowMatrix& items() const { return *items_; }
  std::span<const double> item(ItemRow row) const;

  void save(const std::filesystem::path& path) const;
  /// `items` must be the matrix the forest was built over (same N and m).
  static Forest load(const std::filesystem::path& path,
                     std::shared_ptr<const RowMatrix> items);

 private:
  Forest(std::shared_ptr<const RowMatrix> items, int leaf_size, std::uint64_t seed);

  std::shared_ptr<const RowMatrix> items_;
  RowMatrix unit_items_;
  std::vector<Tree> trees_;
  int leaf_size_ = kDefaultLeafSize;
  std::uint64_t seed_ = 0;
};

}  // namespace drlir
