#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "drlir/actor_critic.hpp"
#include "drlir/embeddings.hpp"

namespace {

std::vector<drlir::Transition> random_batch(int n, int state_dim, int action_dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<drlir::Transition> out;
  for (int i = 0; i < n; ++i) {
    drlir::Transition t;
    t.state = Eigen::VectorXd::NullaryExpr(state_dim, [&] { return g(rng); });
    t.action = Eigen::VectorXd::NullaryExpr(action_dim, [&] { return 0.5 * g(rng); });
    t.next_state = Eigen::VectorXd::NullaryExpr(state_dim, [&] { return g(rng); });
    t.reward = g(rng);
    out.push_back(std::move(t));
  }
  return out;
}

void BM_ActorForward(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const drlir::NetworkShape shape;
  const auto actor = drlir::make_actor(shape, rng);
  const Eigen::VectorXd s = Eigen::VectorXd::Random(shape.state_dim);
  for (auto _ : state) {
    auto a = drlir::actor_forward(actor, s);
    benchmark::DoNotOptimize(a);
  }
}
BENCHMARK(BM_ActorForward);

void BM_DdpgUpdate(benchmark::State& state) {
  const drlir::NetworkShape shape;
  auto nets = drlir::AgentNets::initialize(shape, 1);
  std::mt19937_64 rng(2);
  const auto batch = random_batch(static_cast<int>(state.range(0)), shape.state_dim, shape.action_dim, rng);
  drlir::Optimizer actor_opt({drlir::OptimizerKind::sgd, 1e-4}, nets.actor);
  drlir::Optimizer critic_opt({drlir::OptimizerKind::sgd, 1e-3}, nets.critic);
  for (auto _ : state) {
    const auto y = drlir::td_targets(batch, nets.target_actor, nets.target_critic, 0.9);
    benchmark::DoNotOptimize(drlir::critic_update(batch, nets.critic, y, critic_opt));
    benchmark::DoNotOptimize(drlir::actor_update(batch, nets.actor, nets.critic, actor_opt));
    drlir::soft_update(nets.critic, nets.target_critic, 0.001);
    drlir::soft_update(nets.actor, nets.target_actor, 0.001);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DdpgUpdate)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_PmfEpoch(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> user(1, 943), item(1, 1682), stars(1, 5);
  std::vector<drlir::RatingEvent> ratings;
  for (int i = 0; i < 80000; ++i) ratings.push_back({user(rng), item(rng), stars(rng), i});
  drlir::PmfHyperparams hp;
  hp.epochs = 1;
  for (auto _ : state) {
    auto m = drlir::train_pmf(ratings, 100, hp);
    benchmark::DoNotOptimize(m);
  }
}
BENCHMARK(BM_PmfEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
