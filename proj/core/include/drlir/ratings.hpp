#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string_view>
#include <vector>

namespace drlir {

using UserId = std::int64_t;
using ItemId = std::int64_t;

struct RatingEvent {
  UserId user_id = 0;
  ItemId item_id = 0;
  int rating = 0;
  std::int64_t timestamp = 0;

  friend bool operator==(const RatingEvent&, const RatingEvent&) = default;
};

enum class RatingFormat {
  ml100k,  // u.data: "user\titem\trating\ttimestamp"
  ml1m,    // ratings.dat: "user::item::rating::timestamp"
};

RatingFormat parse_rating_format(std::string_view name);

struct UserHistory {
  UserId user_id = 0;
  std::vector<RatingEvent> events;  // ascending (timestamp, item_id)
};

using HistoryMap = std::map<UserId, UserHistory>;

struct DatasetSplit {
  HistoryMap train;
  HistoryMap test;
};

inline constexpr int kPositiveThreshold = 3;
inline constexpr double kTrainFraction = 0.8;

/// Reads one event per line. Blank lines are skipped; any other malformed
/// line throws ParseError with its line number, out-of-range ratings throw
/// ValidationError.
std::vector<RatingEvent> parse_ratings(std::istream& in, RatingFormat format);
std::vector<RatingEvent> parse_ratings(const std::filesystem::path& path,
                                       RatingFormat format);

std::vector<RatingEvent> filter_positive(std::span<const RatingEvent> events,
                                         int threshold = kPositiveThreshold);

/// Groups by user, keeps the latest rating of a repeated (user, item) pair and
/// orders each history by (timestamp, item_id).
HistoryMap build_histories(std::span<const RatingEvent> events);

/// Chronological per-user prefix split. Users with fewer than `min_events`
/// events are dropped from both sides with a warning.
DatasetSplit split_train_test(const HistoryMap& histories,
                              double ratio = kTrainFraction,
                              std::size_t min_events = 11);

std::vector<RatingEvent> flatten(const HistoryMap& histories);

/// `events` minus every (user, item) pair that appears in `held_out`.
std::vector<RatingEvent> without_held_out(std::span<const RatingEvent> events,
                                          const HistoryMap& held_out);

/// Normalized CSV "user,item,rating,timestamp", ascending (user, timestamp).
void write_events_csv(const std::filesystem::path& path,
                      std::span<const RatingEvent> events);
std::vector<RatingEvent> read_events_csv(const std::filesystem::path& path);

}  // namespace drlir
