// drlir: ingest -> train-embeddings -> build-index -> train-agent -> evaluate,
// plus one-off recommend. Every stage reads and writes inside --run-dir.
#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "drlir/ann_forest.hpp"
#include "drlir/diversify.hpp"
#include "drlir/embeddings.hpp"
#include "drlir/error.hpp"
#include "drlir/io.hpp"
#include "drlir/manifest.hpp"
#include "drlir/metrics.hpp"
#include "drlir/ratings.hpp"
#include "drlir/training.hpp"

namespace fs = std::filesystem;
using namespace drlir;

namespace {

// Missing inputs are usage problems (exit 2), not validation failures.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  fs::path run_dir = "run";
  std::uint64_t seed = 0;
  bool force = false;
  std::string log_level = "info";
};

struct Options {
  Common common;
  // ingest
  fs::path input;
  std::string format = "ml100k";
  // train-embeddings
  PmfHyperparams pmf;
  int width = kEmbeddingWidth;
  bool pmf_positive_only = false;
  // build-index
  int trees = kDefaultTrees;
  int leaf_size = kDefaultLeafSize;
  // train-agent / evaluate / recommend
  fs::path config_file;
  std::vector<std::string> sets;
  std::optional<std::size_t> episodes;
  std::optional<int> fixed_t;
  std::optional<std::size_t> top_n;
  std::optional<std::size_t> candidates;
  std::optional<int> eval_steps;
  std::optional<std::string> optimizer;
  bool no_pe = false;
  bool allow_repeats = false;
  bool no_exploration = false;
  // recommend
  UserId user = 0;
  fs::path out;
};

const char* suffix(bool use_pe) { return use_pe ? "" : "_nope"; }

fs::path require_input(const RunManifest& manifest, const std::string& key,
                       const std::string& producer) {
  const auto p = manifest.path_of(key);
  if (p.empty() || !fs::exists(p)) {
    throw UsageError("missing input '" + key + "' in " + manifest.run_dir().string() + "; run `drlir " +
                     producer + "` first");
  }
  return p;
}

// Refuses to clobber anything this run did not write, unless --force.
class Stage {
 public:
  Stage(const Common& common, std::string name)
      : common_(common), name_(std::move(name)),
        manifest_(RunManifest::load_or_create(common.run_dir)) {
    fs::create_directories(common.run_dir);
    const auto problem = manifest_.verify();
    if (!problem.empty()) spdlog::warn("manifest check: {}", problem);
  }

  RunManifest& manifest() { return manifest_; }

  fs::path output(const std::string& file) const {
    const auto p = common_.run_dir / file;
    if (!common_.force) manifest_.guard_overwrite(p);
    return p;
  }

  void record(const std::string& key, const fs::path& p, const std::string& header) {
    manifest_.record(key, p, header, name_);
  }

  void finish() {
    manifest_.seed = common_.seed;
    manifest_.save();
  }

 private:
  const Common& common_;
  std::string name_;
  RunManifest manifest_;
};

std::vector<RatingEvent> load_events(const RunManifest& manifest) {
  return read_events_csv(require_input(manifest, "events", "ingest"));
}

// Chronological split of each user's positive history.
DatasetSplit split_positives(std::span<const RatingEvent> events) {
  return split_train_test(build_histories(filter_positive(events)));
}

DatasetSplit load_split(const RunManifest& manifest) { return split_positives(load_events(manifest)); }

EmbeddingModel load_model(const RunManifest& manifest) {
  return EmbeddingModel::load(require_input(manifest, "model", "train-embeddings"));
}

Forest load_forest(const RunManifest& manifest, const EmbeddingModel& model) {
  auto items = std::make_shared<const RowMatrix>(model.item_vectors());
  return Forest::load(require_input(manifest, "index", "build-index"), std::move(items));
}

void apply_overrides(TrainConfig& config, const Options& o) {
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.episodes) config.episodes = *o.episodes;
  if (o.fixed_t) config.fixed_steps = *o.fixed_t;
  if (o.top_n) config.top_n = *o.top_n;
  if (o.candidates) config.candidates = *o.candidates;
  if (o.eval_steps) config.eval_steps = *o.eval_steps;
  if (o.optimizer) config.optimizer = parse_optimizer_kind(*o.optimizer);
  if (o.no_pe) config.use_pe = false;
  if (o.allow_repeats) config.allow_repeats = true;
  if (o.no_exploration) config.exploration = false;
}

template <class Fn>
void write_text(const fs::path& p, Fn&& fn) {
  write_atomically(p, [&](std::ostream& out) { fn(out); }, false);
}

double rmse(const EmbeddingModel& model, const HistoryMap& test) {
  double sq = 0.0;
  std::size_t n = 0;
  for (const auto& [user, h] : test) {
    if (!model.users().contains(user)) continue;
    for (const auto& e : h.events) {
      if (!model.items().contains(e.item_id)) continue;
      const double d = model.predict_rating(e.user_id, e.item_id) - e.rating;
      sq += d * d;
      ++n;
    }
  }
  return n ? std::sqrt(sq / static_cast<double>(n)) : 0.0;
}

// ---- stages ----

void run_ingest(const Options& o) {
  if (!fs::exists(o.input)) throw UsageError("input file not found: " + o.input.string());
  Stage stage(o.common, "ingest");
  const auto events = parse_ratings(o.input, parse_rating_format(o.format));
  const auto normalized = flatten(build_histories(events));
  const auto p = stage.output("events.csv");
  write_events_csv(p, normalized);
  stage.record("events", p, "user,item,rating,timestamp");
  stage.finish();
  spdlog::info("ingested {} events ({} after de-duplication) -> {}", events.size(),
               normalized.size(), p.string());
}

void run_train_embeddings(const Options& o) {
  Stage stage(o.common, "train-embeddings");
  const auto events = load_events(stage.manifest());
  const auto split = split_positives(events);
  // Every rating except the held-out test positives; low ratings teach the
  // simulator what a user dislikes.
  auto train_events = without_held_out(events, split.test);
  if (o.pmf_positive_only) train_events = filter_positive(train_events);
  PmfHyperparams hp = o.pmf;
  hp.seed = o.common.seed;
  PmfTrainingLog log;
  const auto model = train_pmf(train_events, o.width, hp, &log);
  const auto p = stage.output("model.bin");
  const auto ids = EmbeddingModel::id_map_path(p);
  if (!o.common.force) stage.manifest().guard_overwrite(ids);
  model.save(p);
  stage.record("model", p, "DRLIRPMF");
  stage.record("model_ids", ids, "{");
  stage.finish();
  spdlog::info("PMF: {} users x {} items, final objective {:.4f}, held-out RMSE {:.4f}",
               model.num_users(), model.num_items(),
               log.epoch_loss.empty() ? 0.0 : log.epoch_loss.back(), rmse(model, split.test));
}

void run_build_index(const Options& o) {
  Stage stage(o.common, "build-index");
  const auto model = load_model(stage.manifest());
  ForestParams params;
  params.n_trees = o.trees;
  params.leaf_size = o.leaf_size;
  params.seed = o.common.seed;
  const auto forest =
      Forest::build(std::make_shared<const RowMatrix>(model.item_vectors()), params);
  const auto p = stage.output("index.bin");
  forest.save(p);
  stage.record("index", p, "DRLIRANN");
  stage.finish();
  spdlog::info("index: {} trees over {} items", forest.n_trees(), forest.size());
}

void run_train_agent(const Options& o) {
  Stage stage(o.common, "train-agent");
  TrainConfig config;
  if (!o.config_file.empty()) {
    if (!fs::exists(o.config_file)) throw UsageError("config not found: " + o.config_file.string());
    config = load_train_config(o.config_file);
  }
  apply_overrides(config, o);
  config.seed = o.common.seed;
  config.validate();

  const auto split = load_split(stage.manifest());
  const auto model = load_model(stage.manifest());
  const auto forest = load_forest(stage.manifest(), model);

  const std::string sfx = suffix(config.use_pe);
  const auto ckpt = stage.output("checkpoint" + sfx + ".bin");
  const auto cfg = stage.output("train_config" + sfx + ".cfg");
  const auto report_csv = stage.output("train_report" + sfx + ".csv");
  const auto curve_csv = stage.output("learning_curve" + sfx + ".csv");
  const auto steps_csv = stage.output("step_log" + sfx + ".csv");

  TrainHooks hooks;
  hooks.abort_checkpoint = o.common.run_dir / ("checkpoint" + sfx + ".abort.bin");
  hooks.after_episode = [&](std::size_t episode, const AgentNets&, TrainReport& report) {
    if (episode % 100 == 0 || episode == config.episodes) {
      const auto& e = report.episodes.back();
      spdlog::info("episode {}/{} mean reward {:.4f}", episode, config.episodes, e.mean_reward);
    }
  };
  const auto result = train(config, split, model, forest, hooks);

  result.nets.save(ckpt);
  save_train_config(cfg, config);
  write_text(report_csv, [&](std::ostream& out) { result.report.write_csv(out); });
  write_text(curve_csv,
             [&](std::ostream& out) { result.report.write_learning_curve(out, config.curve_window); });
  write_text(steps_csv, [&](std::ostream& out) { write_step_log(out, result.report.steps); });

  stage.record("checkpoint" + sfx, ckpt, "DRLIRCKP");
  stage.record("train_config" + sfx, cfg, "# drlir train config");
  stage.record("train_report" + sfx, report_csv, "episode,");
  stage.record("learning_curve" + sfx, curve_csv, "episode,");
  stage.record("step_log" + sfx, steps_csv, "episode,");
  stage.manifest().config_hash = config.hash();
  stage.finish();
  spdlog::info("trained {} episodes ({} updates) -> {}", result.report.episodes.size(),
               result.nets.step, ckpt.string());
}

std::map<std::string, double> read_aggregates(const fs::path& p) {
  std::map<std::string, double> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string metric, user, value;
    if (std::getline(ss, metric, ',') && std::getline(ss, user, ',') && std::getline(ss, value) &&
        user == "all") {
      out[metric] = std::stod(value);
    }
  }
  return out;
}

void write_ablation(Stage& stage, const Common& common) {
  const auto with = stage.manifest().path_of("eval_report");
  const auto without = stage.manifest().path_of("eval_report_nope");
  if (with.empty() || without.empty() || !fs::exists(with) || !fs::exists(without)) return;
  const auto a = read_aggregates(with);
  const auto b = read_aggregates(without);
  const auto p = common.run_dir / "ablation.csv";
  write_text(p, [&](std::ostream& out) {
    out << "metric,with_pe,without_pe,delta\n" << std::setprecision(17);
    for (const auto& [metric, value] : a) {
      auto it = b.find(metric);
      if (it == b.end()) continue;
      out << metric << ',' << value << ',' << it->second << ',' << value - it->second << '\n';
    }
  });
  stage.record("ablation", p, "metric,");
  spdlog::info("positional-encoding ablation -> {}", p.string());
}

void run_evaluate(const Options& o) {
  Stage stage(o.common, "evaluate");
  const bool use_pe = !o.no_pe;
  const std::string sfx = suffix(use_pe);
  const auto cfg = require_input(stage.manifest(), "train_config" + sfx,
                                 use_pe ? "train-agent" : "train-agent --no-positional-encoding");
  TrainConfig config = load_train_config(cfg);
  apply_overrides(config, o);
  config.validate();

  const auto split = load_split(stage.manifest());
  const auto model = load_model(stage.manifest());
  const auto forest = load_forest(stage.manifest(), model);
  const auto nets = AgentNets::load(require_input(stage.manifest(), "checkpoint" + sfx, "train-agent"));
  if (nets.use_pe != config.use_pe) {
    throw ValidationError("checkpoint was trained with use_pe=" + std::string(nets.use_pe ? "true" : "false"));
  }

  const auto report = evaluate(nets, split, model, forest, config);
  const auto p = stage.output("eval_report" + sfx + ".csv");
  write_text(p, [&](std::ostream& out) { report.write_csv(out); });
  stage.record("eval_report" + sfx, p, "# config_hash=");
  write_ablation(stage, o.common);
  stage.finish();
  spdlog::info("{} users: precision@{} {:.4f}, diversity {:.4f}, ndcg {:.4f}", report.users.size(),
               report.top_n, report.aggregate.precision_at_n, report.aggregate.diversity_at_n,
               report.aggregate.ndcg_at_n);
}

void run_recommend(const Options& o) {
  const auto manifest = RunManifest::load_or_create(o.common.run_dir);
  const bool use_pe = !o.no_pe;
  const std::string sfx = suffix(use_pe);
  TrainConfig config = load_train_config(require_input(manifest, "train_config" + sfx, "train-agent"));
  apply_overrides(config, o);
  config.validate();

  const auto model = load_model(manifest);
  const auto forest = load_forest(manifest, model);
  const auto nets = AgentNets::load(require_input(manifest, "checkpoint" + sfx, "train-agent"));
  const auto events = read_events_csv(require_input(manifest, "events", "ingest"));

  // Current state: the user's latest n positives the model knows about.
  const auto histories = build_histories(filter_positive(events));
  auto it = histories.find(o.user);
  if (it == histories.end() || !model.users().contains(o.user)) {
    throw LookupError("unknown user " + std::to_string(o.user));
  }
  std::vector<ItemRow> rows;
  for (const auto& e : it->second.events) {
    if (model.items().contains(e.item_id)) rows.push_back(model.items().row(e.item_id));
  }
  if (rows.size() < config.state_size) {
    throw ValidationError("user " + std::to_string(o.user) + " has " + std::to_string(rows.size()) +
                          " known positives, the state needs " + std::to_string(config.state_size));
  }
  const UserState state(std::vector<ItemRow>(rows.end() - static_cast<std::ptrdiff_t>(config.state_size), rows.end()));

  const Eigen::VectorXd action = actor_forward(nets.actor, encode_state(state, model, config.use_pe));
  std::unordered_set<ItemRow> exclude;
  if (!config.allow_repeats) exclude.insert(state.items().begin(), state.items().end());
  const auto list = recommend(action, forest, config.candidates, config.top_n, exclude,
                              config.search_budget);

  auto emit = [&](std::ostream& out) {
    out << "rank,item_id,tde,angular_distance\n" << std::setprecision(17);
    for (std::size_t r = 0; r < list.items.size(); ++r) {
      const auto& it = list.items[r];
      out << r + 1 << ',' << model.items().id(it.item) << ',' << it.tde << ',' << it.angular_distance
          << '\n';
    }
  };
  if (o.out.empty()) {
    emit(std::cout);
  } else {
    write_text(o.out, emit);
  }
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--run-dir", c.run_dir, "Run directory holding every artifact")->envname("DRLIR_RUN_DIR");
  cmd->add_option("--seed", c.seed, "Seed for all randomness")->envname("DRLIR_SEED");
  cmd->add_flag("--force", c.force, "Overwrite artifacts not recorded by this run")->envname("DRLIR_FORCE");
  cmd->add_option("--log-level", c.log_level, "trace|debug|info|warn|error|off")->envname("DRLIR_LOG_LEVEL");
}

void add_agent_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--set", o.sets, "Override any config key: key=value (repeatable)");
  cmd->add_option("--top-n", o.top_n, "List length N")->envname("DRLIR_TOP_N");
  cmd->add_option("--candidates", o.candidates, "Candidate count |C|")->envname("DRLIR_CANDIDATES");
  cmd->add_flag("--no-positional-encoding", o.no_pe, "Disable positional encoding")
      ->envname("DRLIR_NO_POSITIONAL_ENCODING");
  cmd->add_flag("--allow-repeats", o.allow_repeats, "Allow state items in the list");
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("drlir"));
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");

  CLI::App app{"Diversity-aware deep RL recommender: data, embeddings, index, agent, evaluation"};
  app.require_subcommand(1);
  Options o;

  auto* ingest = app.add_subcommand("ingest", "Parse a ratings file into events.csv");
  add_common(ingest, o.common);
  ingest->add_option("--input", o.input, "u.data or ratings.dat")->required();
  ingest->add_option("--format", o.format, "ml100k | ml1m")->envname("DRLIR_FORMAT");

  auto* emb = app.add_subcommand("train-embeddings", "Fit PMF user and item vectors");
  add_common(emb, o.common);
  emb->add_option("--epochs", o.pmf.epochs, "SGD epochs")->envname("DRLIR_PMF_EPOCHS");
  emb->add_option("--lr", o.pmf.learning_rate, "SGD learning rate");
  emb->add_option("--l2-user", o.pmf.l2_user, "User L2 weight");
  emb->add_option("--l2-item", o.pmf.l2_item, "Item L2 weight");
  emb->add_option("--width", o.width, "Embedding width m");
  emb->add_flag("--pmf-positive-only", o.pmf_positive_only, "Fit on ratings >= 3 only");

  auto* index = app.add_subcommand("build-index", "Build the angular ANN forest");
  add_common(index, o.common);
  index->add_option("--trees", o.trees, "Number of trees")->envname("DRLIR_TREES");
  index->add_option("--leaf-size", o.leaf_size, "Maximum leaf size");

  auto* agent = app.add_subcommand("train-agent", "Train the actor-critic agent");
  add_common(agent, o.common);
  add_agent_flags(agent, o);
  agent->add_option("--config", o.config_file, "key = value config file")->envname("DRLIR_CONFIG");
  agent->add_option("--episodes", o.episodes, "Episodes M")->envname("DRLIR_EPISODES");
  agent->add_option("--fixed-T", o.fixed_t, "Pin the episode length");
  agent->add_option("--optimizer", o.optimizer, "sgd | adam");
  agent->add_flag("--no-exploration", o.no_exploration, "Train without action noise");

  auto* eval = app.add_subcommand("evaluate", "Score the greedy agent on test users");
  add_common(eval, o.common);
  add_agent_flags(eval, o);
  eval->add_option("--eval-steps", o.eval_steps, "Steps rolled per test user");

  auto* rec = app.add_subcommand("recommend", "Print one diversified list for a user");
  add_common(rec, o.common);
  add_agent_flags(rec, o);
  rec->add_option("--user", o.user, "Raw user id")->required();
  rec->add_option("--out", o.out, "Write the CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  spdlog::set_level(spdlog::level::from_str(o.common.log_level));

  try {
    if (*ingest) run_ingest(o);
    else if (*emb) run_train_embeddings(o);
    else if (*index) run_build_index(o);
    else if (*agent) run_train_agent(o);
    else if (*eval) run_evaluate(o);
    else if (*rec) run_recommend(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
