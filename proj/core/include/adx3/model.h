// Domain types, track validation, and the canonical/WebVTT track formats.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "adx3/errors.h"

namespace adx3 {

using Seconds = double;
using Json = nlohmann::ordered_json;

inline constexpr int kTrackSchemaVersion = 1;

enum class Category { Entertainment, Education, Howto };
enum class EventType { Visual, TextOnScreen };
enum class Delivery { Inline, Extended };
enum class Voice { Female, Male };
enum class Source { Ai, Human };

std::string_view to_string(Category c);
std::string_view to_string(EventType t);
std::string_view to_string(Delivery d);
std::string_view to_string(Voice v);
std::string_view to_string(Source s);

std::optional<Category> parse_category(std::string_view s);
std::optional<EventType> parse_event_type(std::string_view s);
std::optional<Delivery> parse_delivery(std::string_view s);
std::optional<Voice> parse_voice(std::string_view s);
std::optional<Source> parse_source(std::string_view s);

struct MediaAsset {
  std::string asset_id;
  std::string title;
  Category category = Category::Entertainment;
  Seconds duration = 0.0;
  double fps = 25.0;
  std::map<std::string, std::string> metadata;

  /// Throws InvalidArgument when duration < 0 or fps <= 0.
  void check() const;
  bool operator==(const MediaAsset&) const = default;
};

struct ADEvent {
  std::string event_id;
  Seconds start_time = 0.0;
  EventType event_type = EventType::Visual;
  Delivery delivery = Delivery::Inline;
  std::string text;
  Voice voice = Voice::Female;
  Seconds estimated_duration = 0.0;
  Source source = Source::Ai;
  std::optional<std::string> audio_uri;

  Seconds end_time() const { return start_time + estimated_duration; }
  bool operator==(const ADEvent&) const = default;
};

struct Track {
  std::string track_id;
  std::string asset_id;
  std::vector<ADEvent> events;
  int schema_version = kTrackSchemaVersion;

  const ADEvent* find(std::string_view event_id) const;
  ADEvent* find(std::string_view event_id);
  bool operator==(const Track&) const = default;
};

struct Gap {
  Seconds start = 0.0;
  Seconds end = 0.0;

  Seconds length() const { return end - start; }
  bool contains(Seconds from, Seconds to) const { return from >= start && to <= end; }
  bool operator==(const Gap&) const = default;
};

/// Visual narration uses the female voice, on-screen text the male voice.
Voice voice_for(EventType type);

/// Strict weak order used everywhere events are sorted: start_time, then event_id.
bool canonical_less(const ADEvent& a, const ADEvent& b);
void canonicalize(Track& track);

/// Asset-independent invariants (text, voice, durations, overlaps, ids).
/// Events are examined in canonical order regardless of input order.
std::vector<Violation> validate_structure(const Track& track);

/// All Track and ADEvent invariants, including the asset time range.
/// Throws AssetMismatch when the track belongs to a different asset.
std::vector<Violation> validate_track(const Track& track, const MediaAsset& asset);

/// Non-fatal findings: an inline and an extended event starting at the same instant.
std::vector<Violation> track_warnings(const Track& track);

void require_valid(const Track& track, const MediaAsset& asset);

/// "HH:MM:SS.mmm", rounded to the nearest millisecond.
std::string format_vtt_timestamp(Seconds t);

/// WebVTT document, one cue per event in canonical order. Throws ValidationFailed.
std::string export_webvtt(const Track& track);

Json to_json(const ADEvent& e);
ADEvent event_from_json(const Json& j);
Json to_json(const Track& t);
Json to_json(const MediaAsset& a);
MediaAsset asset_from_json(const Json& j);

/// Canonical track document (UTF-8 JSON, fixed field order, events sorted).
std::string export_track(const Track& track);

/// Parses a canonical track document. Throws ParseError (with byte offset) or VersionError.
Track import_track(std::string_view bytes);

MediaAsset import_asset(std::string_view bytes);

}  // namespace adx3
