#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <unordered_set>

#include "drlir/ann_forest.hpp"
#include "drlir/diversify.hpp"

namespace {

using drlir::RowMatrix;

std::shared_ptr<const RowMatrix> random_items(Eigen::Index n, Eigen::Index width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  auto m = std::make_shared<RowMatrix>(n, width);
  for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = g(rng);
  return m;
}

Eigen::VectorXd random_query(Eigen::Index width, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd q(width);
  for (auto& x : q) x = u(rng);
  return q;
}

void BM_ForestBuild(benchmark::State& state) {
  const auto items = random_items(state.range(0), 100, 1);
  for (auto _ : state) {
    auto f = drlir::Forest::build(items, {.n_trees = 5, .leaf_size = 30, .seed = 3});
    benchmark::DoNotOptimize(f);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ForestBuild)->RangeMultiplier(2)->Range(1 << 10, 1 << 14)->Unit(benchmark::kMillisecond);

void BM_ForestQuery(benchmark::State& state) {
  const auto items = random_items(state.range(0), 100, 1);
  const auto forest = drlir::Forest::build(items, {.n_trees = 5, .leaf_size = 30, .seed = 3});
  std::mt19937_64 rng(7);
  std::size_t visited = 0;
  for (auto _ : state) {
    state.PauseTiming();
    const auto q = random_query(100, rng);
    state.ResumeTiming();
    drlir::QueryStats stats;
    auto got = forest.query({q.data(), 100}, 30, 0, &stats);
    benchmark::DoNotOptimize(got);
    visited += stats.visited_nodes;
  }
  state.counters["visited"] =
      benchmark::Counter(static_cast<double>(visited), benchmark::Counter::kAvgIterations);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ForestQuery)->RangeMultiplier(2)->Range(1 << 10, 1 << 14)->Complexity();

void BM_BruteForce(benchmark::State& state) {
  const auto items = random_items(state.range(0), 100, 1);
  const auto forest = drlir::Forest::build(items, {.n_trees = 1, .leaf_size = static_cast<int>(state.range(0)), .seed = 3});
  std::mt19937_64 rng(7);
  for (auto _ : state) {
    state.PauseTiming();
    const auto q = random_query(100, rng);
    state.ResumeTiming();
    auto got = forest.query({q.data(), 100}, 30);
    benchmark::DoNotOptimize(got);
  }
}
BENCHMARK(BM_BruteForce)->Arg(1 << 10)->Arg(1 << 12);

void BM_Recommend(benchmark::State& state) {
  const auto items = random_items(1682, 100, 1);
  const auto forest = drlir::Forest::build(items, {.n_trees = 5, .leaf_size = 30, .seed = 3});
  const auto k = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(11);
  std::unordered_set<drlir::ItemRow> exclude{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  for (auto _ : state) {
    state.PauseTiming();
    const auto q = random_query(100, rng);
    state.ResumeTiming();
    auto list = drlir::recommend(q, forest, k, 10, exclude);
    benchmark::DoNotOptimize(list);
  }
}
BENCHMARK(BM_Recommend)->Arg(20)->Arg(40)->Arg(80);

}  // namespace

BENCHMARK_MAIN();
