#include <charconv>
#include <fstream>
#include <sstream>

#include "drlir/error.hpp"
#include "drlir/io.hpp"
#include "drlir/training.hpp"

namespace drlir {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("bad value for " + std::string(key) + ": '" + std::string(value) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("bad boolean for " + std::string(key) + ": '" + std::string(value) + "'");
}

std::vector<int> parse_widths(std::string_view key, std::string_view value) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const auto part = trim(value.substr(start, comma == std::string_view::npos ? value.npos : comma - start));
    out.push_back(parse_number<int>(key, part));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fmt_widths(const std::vector<int>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(w[i]);
  }
  return s;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in [0, 1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must be in (0, 1]");
  if (batch_size == 0) throw ConfigError("batch_size must be > 0");
  if (buffer_capacity < batch_size) throw ConfigError("buffer_capacity must be >= batch_size");
  if (max_steps < 1 && fixed_steps < 1) throw ConfigError("episodes need at least one step");
  if (candidates == 0 || top_n == 0 || state_size == 0) {
    throw ConfigError("candidates, top_n and state_size must be > 0");
  }
  if (exploration && (sigma0 < 0.0 || sigma_decay <= 0.0 || sigma_decay > 1.0)) {
    throw ConfigError("exploration needs sigma0 >= 0 and sigma_decay in (0, 1]");
  }
  if (!(actor_lr > 0.0 && critic_lr > 0.0)) throw ConfigError("learning rates must be > 0");
  if (eval_steps < 1) throw ConfigError("eval_steps must be >= 1");
}

void TrainConfig::set(std::string_view key, std::string_view raw) {
  const auto value = trim(raw);
  if (key == "episodes") episodes = parse_number<std::size_t>(key, value);
  else if (key == "max_steps") max_steps = parse_number<int>(key, value);
  else if (key == "fixed_steps") fixed_steps = parse_number<int>(key, value);
  else if (key == "gamma") gamma = parse_number<double>(key, value);
  else if (key == "tau") tau = parse_number<double>(key, value);
  else if (key == "batch_size") batch_size = parse_number<std::size_t>(key, value);
  else if (key == "buffer_capacity") buffer_capacity = parse_number<std::size_t>(key, value);
  else if (key == "warmup_batches") warmup_batches = parse_number<std::size_t>(key, value);
  else if (key == "candidates") candidates = parse_number<std::size_t>(key, value);
  else if (key == "top_n") top_n = parse_number<std::size_t>(key, value);
  else if (key == "state_size") state_size = parse_number<std::size_t>(key, value);
  else if (key == "search_budget") search_budget = parse_number<std::size_t>(key, value);
  else if (key == "lambda") lambda = parse_number<double>(key, value);
  else if (key == "use_pe") use_pe = parse_bool(key, value);
  else if (key == "exploration") exploration = parse_bool(key, value);
  else if (key == "sigma0") sigma0 = parse_number<double>(key, value);
  else if (key == "sigma_decay") sigma_decay = parse_number<double>(key, value);
  else if (key == "allow_repeats") allow_repeats = parse_bool(key, value);
  else if (key == "optimizer") optimizer = parse_optimizer_kind(value);
  else if (key == "actor_lr") actor_lr = parse_number<double>(key, value);
  else if (key == "critic_lr") critic_lr = parse_number<double>(key, value);
  else if (key == "actor_hidden") actor_hidden = parse_widths(key, value);
  else if (key == "critic_hidden") critic_hidden = parse_widths(key, value);
  else if (key == "eval_steps") eval_steps = parse_number<int>(key, value);
  else if (key == "curve_window") curve_window = parse_number<std::size_t>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  return {
      {"episodes", std::to_string(episodes)},
      {"max_steps", std::to_string(max_steps)},
      {"fixed_steps", std::to_string(fixed_steps)},
      {"gamma", fmt_double(gamma)},
      {"tau", fmt_double(tau)},
      {"batch_size", std::to_string(batch_size)},
      {"buffer_capacity", std::to_string(buffer_capacity)},
      {"warmup_batches", std::to_string(warmup_batches)},
      {"candidates", std::to_string(candidates)},
      {"top_n", std::to_string(top_n)},
      {"state_size", std::to_string(state_size)},
      {"search_budget", std::to_string(search_budget)},
      {"lambda", fmt_double(lambda)},
      {"use_pe", use_pe ? "true" : "false"},
      {"exploration", exploration ? "true" : "false"},
      {"sigma0", fmt_double(sigma0)},
      {"sigma_decay", fmt_double(sigma_decay)},
      {"allow_repeats", allow_repeats ? "true" : "false"},
      {"optimizer", optimizer == OptimizerKind::sgd ? "sgd" : "adam"},
      {"actor_lr", fmt_double(actor_lr)},
      {"critic_lr", fmt_double(critic_lr)},
      {"actor_hidden", fmt_widths(actor_hidden)},
      {"critic_hidden", fmt_widths(critic_hidden)},
      {"eval_steps", std::to_string(eval_steps)},
      {"curve_window", std::to_string(curve_window)},
      {"seed", std::to_string(seed)},
  };
}

std::string TrainConfig::hash() const {
  std::string canonical;
  for (const auto& [k, v] : to_map()) {
    if (k == "use_pe") continue;
    canonical += k + '=' + v + '\n';
  }
  return to_hex(fnv1a64(canonical));
}

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    base.set(trim(view.substr(0, eq)), view.substr(eq + 1));
  }
  return base;
}

void save_train_config(const std::filesystem::path& path, const TrainConfig& config) {
  write_atomically(path, [&](std::ostream& out) {
    out << "# drlir train config\n";
    for (const auto& [k, v] : config.to_map()) out << k << " = " << v << '\n';
  }, false);
}

}  // namespace drlir
