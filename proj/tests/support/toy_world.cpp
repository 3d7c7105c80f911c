#include "toy_world.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace drlir::testing {

ToyWorld make_toy_world(const ToyWorldParams& p) {
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> noise(0.0, p.item_noise);

  RowMatrix items(p.n_items, p.width);
  std::vector<int> item_cluster(static_cast<std::size_t>(p.n_items));
  std::vector<std::int64_t> item_ids;
  for (int i = 0; i < p.n_items; ++i) {
    const int c = i % p.n_clusters;
    item_cluster[static_cast<std::size_t>(i)] = c;
    for (int d = 0; d < p.width; ++d) items(i, d) = (d % p.n_clusters == c ? 1.0 : 0.0) + noise(rng);
    item_ids.push_back(1000 + i);
  }

  RowMatrix users(p.n_users, p.width);
  std::vector<int> user_cluster(static_cast<std::size_t>(p.n_users));
  std::vector<std::int64_t> user_ids;
  for (int u = 0; u < p.n_users; ++u) {
    const int c = u % p.n_clusters;
    user_cluster[static_cast<std::size_t>(u)] = c;
    for (int d = 0; d < p.width; ++d) {
      // Spread the affinity over every axis of the cluster.
      users(u, d) = d % p.n_clusters == c ? p.affinity / std::ceil(double(p.width) / p.n_clusters)
                                          : 0.0;
    }
    user_ids.push_back(1 + u);
  }

  EmbeddingModel model(users, items, IdIndex(user_ids), IdIndex(item_ids));

  // Histories: mostly items from the user's own cluster, rated by the model.
  std::vector<RatingEvent> events;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, p.n_items - 1);
  for (int u = 0; u < p.n_users; ++u) {
    std::vector<int> seen;
    std::int64_t t = 1000;
    while (static_cast<int>(seen.size()) < p.events_per_user) {
      int i = pick(rng);
      if (coin(rng) < 0.8) i = i - i % p.n_clusters + user_cluster[static_cast<std::size_t>(u)];
      if (i >= p.n_items || std::find(seen.begin(), seen.end(), i) != seen.end()) continue;
      seen.push_back(i);
      const int r = static_cast<int>(std::lround(model.predict_rating(UserRow{u}, ItemRow{i})));
      events.push_back({user_ids[static_cast<std::size_t>(u)], item_ids[static_cast<std::size_t>(i)], r, t++});
    }
  }
  auto split = split_train_test(build_histories(filter_positive(events)));
  return ToyWorld{std::move(model), std::move(split), std::move(item_cluster),
                  std::move(user_cluster)};
}

TrainConfig toy_train_config(std::uint64_t seed) {
  TrainConfig c;
  c.seed = seed;
  c.episodes = 2000;
  c.state_size = 4;
  c.top_n = 4;
  c.candidates = 12;
  c.batch_size = 32;
  c.warmup_batches = 4;
  c.buffer_capacity = 20000;
  c.actor_hidden = {32};
  c.critic_hidden = {32};
  c.optimizer = OptimizerKind::adam;
  c.actor_lr = 1e-3;
  c.critic_lr = 1e-3;
  c.tau = 0.01;
  c.sigma0 = 0.3;
  c.sigma_decay = 0.999;
  c.curve_window = 50;
  c.eval_steps = 5;
  return c;
}

}  // namespace drlir::testing
