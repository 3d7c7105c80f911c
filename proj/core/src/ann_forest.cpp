#include "drlir/ann_forest.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <thread>
#include <tuple>

#include "drlir/error.hpp"
#include "drlir/io.hpp"

namespace drlir {
namespace {

constexpr std::string_view kIndexMagic = "DRLIRANN";
constexpr std::uint32_t kIndexVersion = 1;
constexpr int kSplitRetries = 3;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::mt19937_64 tree_rng(std::uint64_t seed, int tree) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tree)};
  return std::mt19937_64(seq);
}

class TreeBuilder {
 public:
  TreeBuilder(const RowMatrix& unit, int leaf_size, std::mt19937_64 rng)
      : unit_(unit), leaf_size_(static_cast<std::size_t>(leaf_size)), rng_(std::move(rng)) {}

  Tree build() {
    std::vector<ItemRow> all(static_cast<std::size_t>(unit_.rows()));
    std::iota(all.begin(), all.end(), 0);
    tree_.root = split(std::move(all));
    return std::move(tree_);
  }

 private:
  std::span<const double> row(ItemRow r) const {
    return {unit_.data() + static_cast<std::ptrdiff_t>(r) * unit_.cols(),
            static_cast<std::size_t>(unit_.cols())};
  }

  std::int32_t split(std::vector<ItemRow> items) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    if (items.size() <= leaf_size_) {
      tree_.nodes.emplace_back(LeafNode{std::move(items)});
      return id;
    }
    tree_.nodes.emplace_back(LeafNode{});  // placeholder, replaced below

    const auto m = static_cast<std::size_t>(unit_.cols());
    std::uniform_int_distribution<std::size_t> pick(0, items.size() - 1);
    InternalNode node;
    std::vector<ItemRow> left, right;
    bool ok = false;
    for (int attempt = 0; attempt <= kSplitRetries && !ok; ++attempt) {
      const std::size_t i = pick(rng_);
      std::size_t j = pick(rng_);
      while (j == i) j = pick(rng_);
      auto p1 = row(items[i]);
      auto p2 = row(items[j]);
      node.normal.assign(m, 0.0);
      node.offset = 0.0;
      bool nonzero = false;
      for (std::size_t d = 0; d < m; ++d) {
        node.normal[d] = p1[d] - p2[d];
        node.offset += node.normal[d] * 0.5 * (p1[d] + p2[d]);
        nonzero = nonzero || node.normal[d] != 0.0;
      }
      if (!nonzero) continue;
      left.clear();
      right.clear();
      for (ItemRow r : items) {
        // Points exactly on the plane go left.
        (dot(node.normal, row(r)) - node.offset > 0.0 ? right : left).push_back(r);
      }
      ok = !left.empty() && !right.empty();
    }
    if (!ok) {
      node.normal.assign(m, 0.0);
      node.offset = 0.0;
      const auto half = static_cast<std::ptrdiff_t>(items.size() / 2);
      left.assign(items.begin(), items.begin() + half);
      right.assign(items.begin() + half, items.end());
    }
    items.clear();
    items.shrink_to_fit();
    node.left = split(std::move(left));
    node.right = split(std::move(right));
    tree_.nodes[static_cast<std::size_t>(id)] = std::move(node);
    return id;
  }

  const RowMatrix& unit_;
  std::size_t leaf_size_;
  std::mt19937_64 rng_;
  Tree tree_;
};

}  // namespace

double angular_distance(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 1.0;
  const double cos = ab / (std::sqrt(aa) * std::sqrt(bb));
  return 1.0 - std::clamp(cos, -1.0, 1.0);
}

Forest::Forest(std::shared_ptr<const RowMatrix> items, int leaf_size, std::uint64_t seed)
    : items_(std::move(items)), leaf_size_(leaf_size), seed_(seed) {
  unit_items_ = *items_;
  for (Eigen::Index r = 0; r < unit_items_.rows(); ++r) {
    const double norm = unit_items_.row(r).norm();
    if (norm > 0.0) unit_items_.row(r) /= norm;
  }
}

Forest Forest::build(std::shared_ptr<const RowMatrix> items, const ForestParams& params) {
  if (!items || items->rows() < 1) throw ValidationError("build_forest: no items");
  if (params.leaf_size < 1) throw ConfigError("leaf_size must be >= 1");
  if (params.n_trees < 1) throw ConfigError("n_trees must be >= 1");
  if (!items->allFinite()) throw ValidationError("build_forest: non-finite item vectors");

  Forest forest(std::move(items), params.leaf_size, params.seed);
  forest.trees_.resize(static_cast<std::size_t>(params.n_trees));
  auto build_one = [&forest, &params](int t) {
    TreeBuilder builder(forest.unit_items_, params.leaf_size, tree_rng(params.seed, t));
    forest.trees_[static_cast<std::size_t>(t)] = builder.build();
  };
  if (params.parallel_build) {
    std::vector<std::jthread> workers;
    for (int t = 0; t < params.n_trees; ++t) workers.emplace_back(build_one, t);
  } else {
    for (int t = 0; t < params.n_trees; ++t) build_one(t);
  }
  return forest;
}

std::span<const double> Forest::item(ItemRow row) const {
  return {items_->data() + static_cast<std::ptrdiff_t>(row) * items_->cols(),
          static_cast<std::size_t>(items_->cols())};
}

std::vector<Neighbor> Forest::query(std::span<const double> q, std::size_t k,
                                    std::size_t search_budget, QueryStats* stats) const {
  if (k < 1) throw ConfigError("query: k must be >= 1");
  if (q.size() != static_cast<std::size_t>(width())) {
    throw ValidationError("query: vector width " + std::to_string(q.size()) +
                          " does not match index width " + std::to_string(width()));
  }
  if (!std::all_of(q.begin(), q.end(), [](double x) { return std::isfinite(x); })) {
    throw ValidationError("query: non-finite query vector");
  }
  const std::size_t n = size();
  if (k > n) {
    spdlog::info("query: k={} exceeds index size {}, returning all items", k, n);
    k = n;
  }
  const std::size_t budget =
      std::max(k, search_budget > 0 ? search_budget : static_cast<std::size_t>(n_trees()) * k);

  std::vector<double> unit_q(q.begin(), q.end());
  const double qn = std::sqrt(dot(unit_q, unit_q));
  if (qn > 0.0) {
    for (double& x : unit_q) x /= qn;
  }

  using Entry = std::tuple<double, int, std::int32_t>;  // margin, tree, node
  std::priority_queue<Entry> frontier;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (int t = 0; t < n_trees(); ++t) frontier.emplace(kInf, t, trees_[static_cast<std::size_t>(t)].root);

  std::vector<char> seen(n, 0);
  std::vector<ItemRow> candidates;
  candidates.reserve(budget + static_cast<std::size_t>(leaf_size_));
  std::size_t visited = 0;
  while (!frontier.empty() && candidates.size() < budget) {
    auto [priority, t, node_id] = frontier.top();
    frontier.pop();
    ++visited;
    const auto& node = trees_[static_cast<std::size_t>(t)].nodes[static_cast<std::size_t>(node_id)];
    if (const auto* leaf = std::get_if<LeafNode>(&node)) {
      for (ItemRow r : leaf->items) {
        if (!seen[static_cast<std::size_t>(r)]) {
          seen[static_cast<std::size_t>(r)] = 1;
          candidates.push_back(r);
        }
      }
    } else {
      const auto& split = std::get<InternalNode>(node);
      const double margin = dot(split.normal, unit_q) - split.offset;
      frontier.emplace(std::min(priority, margin), t, split.right);
      frontier.emplace(std::min(priority, -margin), t, split.left);
    }
  }

  std::vector<Neighbor> scored;
  scored.reserve(candidates.size());
  for (ItemRow r : candidates) scored.push_back({r, angular_distance(q, item(r))});
  const auto by_distance = [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.item < b.item;
  };
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                    scored.end(), by_distance);
  scored.resize(keep);
  if (stats) {
    stats->visited_nodes = visited;
    stats->candidates = candidates.size();
  }
  return scored;
}

void Forest::save(const std::filesystem::path& path) const {
  write_atomically(path, [&](std::ostream& out) {
    binary::write_magic(out, kIndexMagic);
    binary::write_u32(out, kIndexVersion);
    binary::write_u32(out, static_cast<std::uint32_t>(size()));
    binary::write_u32(out, static_cast<std::uint32_t>(width()));
    binary::write_u32(out, static_cast<std::uint32_t>(n_trees()));
    binary::write_u32(out, static_cast<std::uint32_t>(leaf_size_));
    binary::write_u64(out, seed_);
    for (const auto& tree : trees_) {
      binary::write_u32(out, static_cast<std::uint32_t>(tree.nodes.size()));
      binary::write_i32(out, tree.root);
      for (const auto& node : tree.nodes) {
        if (const auto* leaf = std::get_if<LeafNode>(&node)) {
          out.put(1);
          binary::write_u32(out, static_cast<std::uint32_t>(leaf->items.size()));
          for (ItemRow r : leaf->items) binary::write_i32(out, r);
        } else {
          const auto& split = std::get<InternalNode>(node);
          out.put(0);
          binary::write_i32(out, split.left);
          binary::write_i32(out, split.right);
          binary::write_f64(out, split.offset);
          for (double x : split.normal) binary::write_f64(out, x);
        }
      }
    }
  });
}

Forest Forest::load(const std::filesystem::path& path,
                    std::shared_ptr<const RowMatrix> items) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open index " + path.string());
  binary::expect_magic(in, kIndexMagic);
  const auto version = binary::read_u32(in);
  if (version != kIndexVersion) {
    throw FormatError("index version " + std::to_string(version) + " not supported");
  }
  const auto n = binary::read_u32(in);
  const auto m = binary::read_u32(in);
  const auto n_trees = binary::read_u32(in);
  const auto leaf_size = binary::read_u32(in);
  const auto seed = binary::read_u64(in);
  if (!items || static_cast<std::uint32_t>(items->rows()) != n ||
      static_cast<std::uint32_t>(items->cols()) != m) {
    throw FormatError("index was built over a different item matrix");
  }
  Forest forest(std::move(items), static_cast<int>(leaf_size), seed);
  forest.trees_.resize(n_trees);
  for (auto& tree : forest.trees_) {
    const auto count = binary::read_u32(in);
    tree.root = binary::read_i32(in);
    tree.nodes.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      const int tag = in.get();
      if (tag == 1) {
        LeafNode leaf;
        leaf.items.resize(binary::read_u32(in));
        for (auto& r : leaf.items) {
          r = binary::read_i32(in);
          if (r < 0 || static_cast<std::uint32_t>(r) >= n) throw FormatError("leaf item out of range");
        }
        tree.nodes.emplace_back(std::move(leaf));
      } else if (tag == 0) {
        InternalNode split;
        split.left = binary::read_i32(in);
        split.right = binary::read_i32(in);
        split.offset = binary::read_f64(in);
        split.normal.resize(m);
        for (double& x : split.normal) x = binary::read_f64(in);
        if (split.left < 0 || split.right < 0 || static_cast<std::uint32_t>(split.left) >= count ||
            static_cast<std::uint32_t>(split.right) >= count) {
          throw FormatError("child index out of range");
        }
        tree.nodes.emplace_back(std::move(split));
      } else {
        throw FormatError("corrupt node tag");
      }
    }
  }
  return forest;
}

}  // namespace drlir
