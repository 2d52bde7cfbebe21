// Rubric-constrained rating capture, blinded assignment plans, and score aggregation.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "adx3/model.h"

namespace adx3 {

inline constexpr std::size_t kDimensionCount = 7;
inline constexpr std::array<std::string_view, kDimensionCount> kDimensions = {
    "Accurate",
    "Prioritized",
    "Appropriate",
    "Consistent",
    "Equal",
    "Strategic Use of Description Method",
    "Timing & Placement",
};
inline constexpr std::array<std::string_view, 3> kConditionLabels = {"A", "B", "C"};

/// Index into kDimensions; also accepts the alternative names used in published score
/// tables ("Strategic Use of Delivery Method", "Track Placement").
std::optional<std::size_t> dimension_index(std::string_view name);

struct RatingRecord {
  std::string rater_id;
  std::string video_id;
  std::string condition_label;
  std::optional<std::string> model_id;
  std::array<int, kDimensionCount> scores{};
  std::string comment;
  bool operator==(const RatingRecord&) const = default;
};

/// Throws ValidationFailed for missing ids, a label outside A/B/C, or a score outside 1..5.
void validate_rating(const RatingRecord& r);

struct Video {
  std::string video_id;
  Category category = Category::Entertainment;
  bool operator==(const Video&) const = default;
};

struct VideoAssignment {
  /// label -> model
  std::map<std::string, std::string> labels;
  /// Labels in the order the rater views the versions.
  std::vector<std::string> viewing_order;
  bool operator==(const VideoAssignment&) const = default;
};

struct RaterPlan {
  std::string rater_id;
  std::vector<std::string> video_order;
  std::map<std::string, VideoAssignment> videos;
  bool operator==(const RaterPlan&) const = default;
};

struct AssignmentPlan {
  std::uint64_t seed = 0;
  std::vector<std::string> models;
  std::vector<Video> videos;
  std::vector<RaterPlan> raters;

  /// Throws NotFound for an unknown rater, video, or label.
  const std::string& unblind(std::string_view rater, std::string_view video,
                             std::string_view label) const;
  const std::string& blind(std::string_view rater, std::string_view video,
                           std::string_view model) const;
  const Video& video(std::string_view video_id) const;
  bool operator==(const AssignmentPlan&) const = default;
};

/// Seeded three-level shuffle: video order per rater, label -> model per (rater, video), and
/// viewing order per (rater, video). Throws CardinalityError unless there are exactly 3
/// distinct models, InvalidArgument for empty or duplicate raters/videos.
AssignmentPlan make_assignment(std::span<const std::string> raters, std::span<const Video> videos,
                               std::span<const std::string> models, std::uint64_t seed);

/// Uniform integer in [0, bound) from a full-range 64-bit engine by rejection sampling;
/// unlike std::uniform_int_distribution the sequence is identical on every platform.
template <class Engine>
std::uint64_t uniform_below(std::uint64_t bound, Engine& engine) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = engine();
    if (r >= threshold) return r % bound;
  }
}

Json to_json(const AssignmentPlan& plan);
AssignmentPlan plan_from_json(const Json& j);

/// Last-writer-wins store keyed by (rater, video, label).
class RatingStore {
 public:
  /// Validates and stores, replacing an earlier record with the same key. Returns the key
  /// as "rater/video/label".
  std::string record(RatingRecord r);
  std::vector<RatingRecord> snapshot() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::tuple<std::string, std::string, std::string>, RatingRecord> records_;
};

/// Header: rater_id,video_id,condition_label,<seven dimension names>,comment (comment optional).
std::vector<RatingRecord> parse_ratings_csv(std::string_view text);
std::string write_ratings_csv(std::span<const RatingRecord> records);

Json to_json(const RatingRecord& r);
RatingRecord rating_from_json(const Json& j);

struct Stat {
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> sd;
  bool operator==(const Stat&) const = default;
};

/// Welford mean and sample standard deviation; sd is empty for n < 2.
Stat summarize(std::span<const double> values);

struct ModelReport {
  std::string model_id;
  /// Pooled over every dimension score of the model.
  Stat overall;
  std::array<Stat, kDimensionCount> criteria;
  std::map<Category, Stat> categories;
};

struct Report {
  std::vector<ModelReport> models;
};

/// Resolves labels through `plan` and summarizes per model, criterion, and category.
/// Models appear in plan order; models without ratings are omitted.
Report aggregate(std::span<const RatingRecord> records, const AssignmentPlan& plan);

/// Two-decimal text tables of per-model means/SDs and per-category means.
std::string format_report(const Report& report);
Json to_json(const Report& report);

}  // namespace adx3
