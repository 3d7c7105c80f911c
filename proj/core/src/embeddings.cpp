#include "drlir/embeddings.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "drlir/error.hpp"
#include "drlir/io.hpp"

namespace drlir {
namespace {

constexpr std::string_view kModelMagic = "DRLIRPMF";
constexpr std::uint32_t kModelVersion = 1;
constexpr int kIdMapVersion = 1;

void round_to_float(RowMatrix& m) { m = m.cast<float>().cast<double>(); }

}  // namespace

IdIndex::IdIndex(std::vector<std::int64_t> ids) {
  for (auto id : ids) {
    if (rows_.contains(id)) throw ValidationError("duplicate id " + std::to_string(id));
    insert(id);
  }
}

std::int32_t IdIndex::insert(std::int64_t id) {
  auto [it, inserted] = rows_.try_emplace(id, static_cast<std::int32_t>(ids_.size()));
  if (inserted) ids_.push_back(id);
  return it->second;
}

std::int32_t IdIndex::row(std::int64_t id) const {
  auto it = rows_.find(id);
  if (it == rows_.end()) throw LookupError("unknown id " + std::to_string(id));
  return it->second;
}

void PmfHyperparams::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("pmf learning_rate must be > 0");
  if (l2_user < 0.0 || l2_item < 0.0) throw ConfigError("pmf l2 must be >= 0");
  if (epochs < 0) throw ConfigError("pmf epochs must be >= 0");
  if (!(init_scale > 0.0)) throw ConfigError("pmf init_scale must be > 0");
}

double clamp_rating(double raw) {
  if (std::isnan(raw)) return kMinRating;
  return std::clamp(raw, kMinRating, kMaxRating);
}

EmbeddingModel::EmbeddingModel(RowMatrix user_vectors, RowMatrix item_vectors,
                               IdIndex users, IdIndex items)
    : user_vectors_(std::move(user_vectors)),
      item_vectors_(std::move(item_vectors)),
      users_(std::move(users)),
      items_(std::move(items)) {
  if (user_vectors_.cols() != item_vectors_.cols()) {
    throw ValidationError("user and item embeddings differ in width");
  }
  if (static_cast<std::size_t>(user_vectors_.rows()) != users_.size() ||
      static_cast<std::size_t>(item_vectors_.rows()) != items_.size()) {
    throw ValidationError("embedding rows do not match id maps");
  }
  if (!user_vectors_.allFinite() || !item_vectors_.allFinite()) {
    throw ValidationError("embeddings contain non-finite values");
  }
}

double EmbeddingModel::raw_score(UserRow user, ItemRow item) const {
  return user_vectors_.row(user).dot(item_vectors_.row(item));
}

double EmbeddingModel::predict_rating(UserId user, ItemId item) const {
  return predict_rating(users_.row(user), items_.row(item));
}

std::span<const double> EmbeddingModel::item_vector(ItemId item) const {
  return item_row(items_.row(item));
}

std::span<const double> EmbeddingModel::item_row(ItemRow row) const {
  if (row < 0 || row >= item_vectors_.rows()) {
    throw LookupError("item row " + std::to_string(row) + " out of range");
  }
  return {item_vectors_.data() + static_cast<std::ptrdiff_t>(row) * item_vectors_.cols(),
          static_cast<std::size_t>(item_vectors_.cols())};
}

std::span<const double> EmbeddingModel::user_row(UserRow row) const {
  if (row < 0 || row >= user_vectors_.rows()) {
    throw LookupError("user row " + std::to_string(row) + " out of range");
  }
  return {user_vectors_.data() + static_cast<std::ptrdiff_t>(row) * user_vectors_.cols(),
          static_cast<std::size_t>(user_vectors_.cols())};
}

std::filesystem::path EmbeddingModel::id_map_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".ids.json";
  return p;
}

void EmbeddingModel::save(const std::filesystem::path& path) const {
  auto write_matrix = [](std::ostream& out, const RowMatrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      binary::write_f32(out, static_cast<float>(m.data()[i]));
    }
  };
  write_atomically(path, [&](std::ostream& out) {
    binary::write_magic(out, kModelMagic);
    binary::write_u32(out, kModelVersion);
    binary::write_u32(out, static_cast<std::uint32_t>(width()));
    binary::write_u32(out, static_cast<std::uint32_t>(num_users()));
    binary::write_u32(out, static_cast<std::uint32_t>(num_items()));
    write_matrix(out, user_vectors_);
    write_matrix(out, item_vectors_);
  });
  nlohmann::json ids = {{"format", "drlir-pmf-ids"},
                        {"version", kIdMapVersion},
                        {"users", users_.ids()},
                        {"items", items_.ids()}};
  write_atomically(id_map_path(path),
                   [&](std::ostream& out) { out << ids.dump() << '\n'; }, false);
}

EmbeddingModel EmbeddingModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model " + path.string());
  binary::expect_magic(in, kModelMagic);
  const auto version = binary::read_u32(in);
  if (version != kModelVersion) {
    throw FormatError("model version " + std::to_string(version) +
                      " not supported (expected " + std::to_string(kModelVersion) + ")");
  }
  const auto m = binary::read_u32(in);
  const auto nu = binary::read_u32(in);
  const auto ni = binary::read_u32(in);
  auto read_matrix = [&](std::uint32_t rows) {
    RowMatrix mat(rows, m);
    for (Eigen::Index i = 0; i < mat.size(); ++i) mat.data()[i] = binary::read_f32(in);
    return mat;
  };
  RowMatrix users = read_matrix(nu);
  RowMatrix items = read_matrix(ni);

  std::ifstream jin(id_map_path(path));
  if (!jin) throw Error("missing id map " + id_map_path(path).string());
  nlohmann::json ids;
  try {
    jin >> ids;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("id map: ") + e.what());
  }
  if (ids.value("format", "") != "drlir-pmf-ids" ||
      ids.value("version", -1) != kIdMapVersion) {
    throw FormatError("id map version mismatch");
  }
  IdIndex user_ids(ids.at("users").get<std::vector<std::int64_t>>());
  IdIndex item_ids(ids.at("items").get<std::vector<std::int64_t>>());
  if (user_ids.size() != nu || item_ids.size() != ni) {
    throw FormatError("id map does not match model header");
  }
  return EmbeddingModel(std::move(users), std::move(items), std::move(user_ids),
                        std::move(item_ids));
}

PmfObservationGradient pmf_observation_gradient(const Eigen::VectorXd& user,
                                                const Eigen::VectorXd& item,
                                                double rating, double l2_user,
                                                double l2_item) {
  const double err = rating - user.dot(item);
  PmfObservationGradient g;
  g.loss = err * err + l2_user * user.squaredNorm() + l2_item * item.squaredNorm();
  g.user = -2.0 * err * item + 2.0 * l2_user * user;
  g.item = -2.0 * err * user + 2.0 * l2_item * item;
  return g;
}

double pmf_objective(const EmbeddingModel& model,
                     std::span<const RatingEvent> ratings, double l2_user,
                     double l2_item) {
  double sum = 0.0;
  for (const auto& e : ratings) {
    const double err =
        e.rating - model.raw_score(model.users().row(e.user_id), model.items().row(e.item_id));
    sum += err * err;
  }
  return sum + l2_user * model.user_vectors().squaredNorm() +
         l2_item * model.item_vectors().squaredNorm();
}

EmbeddingModel train_pmf(std::span<const RatingEvent> ratings, int width,
                         const PmfHyperparams& hp, PmfTrainingLog* log) {
  hp.validate();
  if (ratings.empty()) throw ValidationError("train_pmf: no ratings");
  if (width <= 0) throw ConfigError("embedding width must be > 0");

  IdIndex users;
  IdIndex items;
  struct Obs {
    UserRow user;
    ItemRow item;
    double rating;
  };
  std::vector<Obs> obs;
  obs.reserve(ratings.size());
  for (const auto& e : ratings) {
    obs.push_back({users.insert(e.user_id), items.insert(e.item_id),
                   static_cast<double>(e.rating)});
  }

  std::mt19937_64 rng(hp.seed);
  std::uniform_real_distribution<double> init(-hp.init_scale, hp.init_scale);
  RowMatrix U(static_cast<Eigen::Index>(users.size()), width);
  RowMatrix V(static_cast<Eigen::Index>(items.size()), width);
  for (Eigen::Index i = 0; i < U.size(); ++i) U.data()[i] = init(rng);
  for (Eigen::Index i = 0; i < V.size(); ++i) V.data()[i] = init(rng);

  std::vector<std::size_t> order(obs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::RowVectorXd u_old(width);
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      const auto& o = obs[idx];
      auto u = U.row(o.user);
      auto v = V.row(o.item);
      const double err = o.rating - u.dot(v);
      u_old = u;
      u -= hp.learning_rate * (-2.0 * err * v + 2.0 * hp.l2_user * u);
      v -= hp.learning_rate * (-2.0 * err * u_old + 2.0 * hp.l2_item * v);
    }
    double loss = 0.0;
    for (const auto& o : obs) {
      const double err = o.rating - U.row(o.user).dot(V.row(o.item));
      loss += err * err;
    }
    loss += hp.l2_user * U.squaredNorm() + hp.l2_item * V.squaredNorm();
    if (!std::isfinite(loss)) {
      throw DivergenceError("PMF diverged at epoch " + std::to_string(epoch + 1) +
                            "; try a smaller learning_rate");
    }
    if (log) log->epoch_loss.push_back(loss);
    spdlog::debug("pmf epoch {} loss {:.4f}", epoch + 1, loss);
  }

  round_to_float(U);
  round_to_float(V);
  return EmbeddingModel(std::move(U), std::move(V), std::move(users), std::move(items));
}

}  // namespace drlir
