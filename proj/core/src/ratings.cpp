#include "drlir/ratings.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>

#include "drlir/error.hpp"
#include "drlir/io.hpp"

namespace drlir {
namespace {

bool parse_int(std::string_view field, std::int64_t& out) {
  if (field.empty()) return false;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc{} && ptr == field.data() + field.size();
}

std::vector<std::string_view> split(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + sep.size();
  }
}

RatingEvent parse_line(std::string_view line, std::string_view sep,
                       std::size_t line_no) {
  auto fields = split(line, sep);
  if (fields.size() != 4) {
    throw ParseError(line_no, "expected 4 fields, got " +
                                  std::to_string(fields.size()));
  }
  std::int64_t values[4];
  for (int i = 0; i < 4; ++i) {
    if (!parse_int(fields[i], values[i])) {
      throw ParseError(line_no, "not an integer: '" + std::string(fields[i]) + "'");
    }
  }
  if (values[0] < 1 || values[1] < 1) {
    throw ParseError(line_no, "user and item ids must be >= 1");
  }
  if (values[2] < 1 || values[2] > 5) {
    throw ValidationError("line " + std::to_string(line_no) + ": rating " +
                          std::to_string(values[2]) + " outside [1,5]");
  }
  return RatingEvent{values[0], values[1], static_cast<int>(values[2]), values[3]};
}

bool chronological(const RatingEvent& a, const RatingEvent& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.item_id < b.item_id;
}

}  // namespace

RatingFormat parse_rating_format(std::string_view name) {
  if (name == "ml100k") return RatingFormat::ml100k;
  if (name == "ml1m") return RatingFormat::ml1m;
  throw ConfigError("unknown rating format '" + std::string(name) +
                    "' (expected ml100k or ml1m)");
}

std::vector<RatingEvent> parse_ratings(std::istream& in, RatingFormat format) {
  const std::string_view sep = format == RatingFormat::ml100k ? "\t" : "::";
  std::vector<RatingEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (view.empty()) continue;
    events.push_back(parse_line(view, sep, line_no));
  }
  return events;
}

std::vector<RatingEvent> parse_ratings(const std::filesystem::path& path,
                                       RatingFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ratings file " + path.string());
  return parse_ratings(in, format);
}

std::vector<RatingEvent> filter_positive(std::span<const RatingEvent> events,
                                         int threshold) {
  std::vector<RatingEvent> out;
  out.reserve(events.size());
  std::copy_if(events.begin(), events.end(), std::back_inserter(out),
               [threshold](const RatingEvent& e) { return e.rating >= threshold; });
  return out;
}

HistoryMap build_histories(std::span<const RatingEvent> events) {
  // Latest rating wins for a repeated (user, item); on equal timestamps the
  // later line in the input wins.
  std::map<UserId, std::unordered_map<ItemId, RatingEvent>> latest;
  for (const auto& e : events) {
    auto& slot = latest[e.user_id];
    auto it = slot.find(e.item_id);
    if (it == slot.end()) {
      slot.emplace(e.item_id, e);
    } else if (e.timestamp >= it->second.timestamp) {
      it->second = e;
    }
  }
  HistoryMap histories;
  for (auto& [user, items] : latest) {
    UserHistory h{user, {}};
    h.events.reserve(items.size());
    for (auto& [item, e] : items) h.events.push_back(e);
    std::sort(h.events.begin(), h.events.end(), chronological);
    histories.emplace(user, std::move(h));
  }
  return histories;
}

DatasetSplit split_train_test(const HistoryMap& histories, double ratio,
                              std::size_t min_events) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw ConfigError("train ratio must be in (0, 1]");
  }
  DatasetSplit split;
  std::size_t dropped = 0;
  for (const auto& [user, history] : histories) {
    const std::size_t len = history.events.size();
    if (len < min_events || len == 0) {
      ++dropped;
      continue;
    }
    const auto n_train = static_cast<std::size_t>(
        std::floor(ratio * static_cast<double>(len) + 1e-9));
    UserHistory train{user, {history.events.begin(),
                             history.events.begin() + static_cast<std::ptrdiff_t>(n_train)}};
    UserHistory test{user, {history.events.begin() + static_cast<std::ptrdiff_t>(n_train),
                            history.events.end()}};
    split.train.emplace(user, std::move(train));
    split.test.emplace(user, std::move(test));
  }
  if (dropped > 0) {
    spdlog::warn("split_train_test: dropped {} user(s) with fewer than {} events",
                 dropped, min_events);
  }
  return split;
}

std::vector<RatingEvent> flatten(const HistoryMap& histories) {
  std::vector<RatingEvent> out;
  for (const auto& [user, h] : histories) {
    out.insert(out.end(), h.events.begin(), h.events.end());
  }
  return out;
}

void write_events_csv(const std::filesystem::path& path,
                      std::span<const RatingEvent> events) {
  std::vector<RatingEvent> sorted(events.begin(), events.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const RatingEvent& a, const RatingEvent& b) {
                     if (a.user_id != b.user_id) return a.user_id < b.user_id;
                     return a.timestamp < b.timestamp;
                   });
  write_atomically(path, [&](std::ostream& out) {
    out << "user,item,rating,timestamp\n";
    for (const auto& e : sorted) {
      out << e.user_id << ',' << e.item_id << ',' << e.rating << ','
          << e.timestamp << '\n';
    }
  }, false);
}

std::vector<RatingEvent> read_events_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open events file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("user,item,rating,timestamp", 0) != 0) {
    throw ParseError(1, "missing events CSV header");
  }
  std::vector<RatingEvent> events;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    events.push_back(parse_line(line, ",", line_no));
  }
  return events;
}

std::vector<RatingEvent> without_held_out(std::span<const RatingEvent> events,
                                          const HistoryMap& held_out) {
  std::set<std::pair<UserId, ItemId>> skip;
  for (const auto& [user, h] : held_out) {
    for (const auto& e : h.events) skip.emplace(user, e.item_id);
  }
  std::vector<RatingEvent> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    if (!skip.contains({e.user_id, e.item_id})) out.push_back(e);
  }
  return out;
}

}  // namespace drlir
