#include "adx3/model.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "json_util.h"

namespace adx3 {

namespace {

template <class Enum, std::size_t N>
std::optional<Enum> lookup(std::string_view s, const std::pair<Enum, std::string_view> (&table)[N]) {
  for (const auto& [value, name] : table) {
    if (name == s) return value;
  }
  return std::nullopt;
}

template <class Enum, std::size_t N>
std::string_view name_of(Enum e, const std::pair<Enum, std::string_view> (&table)[N]) {
  for (const auto& [value, name] : table) {
    if (value == e) return name;
  }
  return "?";
}

constexpr std::pair<Category, std::string_view> kCategories[] = {
    {Category::Entertainment, "entertainment"},
    {Category::Education, "education"},
    {Category::Howto, "howto"},
};
constexpr std::pair<EventType, std::string_view> kEventTypes[] = {
    {EventType::Visual, "visual"},
    {EventType::TextOnScreen, "text_on_screen"},
};
constexpr std::pair<Delivery, std::string_view> kDeliveries[] = {
    {Delivery::Inline, "inline"},
    {Delivery::Extended, "extended"},
};
constexpr std::pair<Voice, std::string_view> kVoices[] = {
    {Voice::Female, "female"},
    {Voice::Male, "male"},
};
constexpr std::pair<Source, std::string_view> kSources[] = {
    {Source::Ai, "ai"},
    {Source::Human, "human"},
};

template <class Enum, std::size_t N>
Enum parse_enum_field(const Json& j, std::string_view key, std::string_view what,
                      const std::pair<Enum, std::string_view> (&table)[N]) {
  std::string raw = detail::get_string(j, key, what);
  auto v = lookup(raw, table);
  if (!v) {
    throw ParseError(std::string(what) + ": invalid " + std::string(key) + " '" + raw + "'", 0);
  }
  return *v;
}

std::vector<const ADEvent*> sorted_view(const Track& track) {
  std::vector<const ADEvent*> order;
  order.reserve(track.events.size());
  for (const auto& e : track.events) order.push_back(&e);
  std::stable_sort(order.begin(), order.end(),
                   [](const ADEvent* a, const ADEvent* b) { return canonical_less(*a, *b); });
  return order;
}

}  // namespace

std::string_view to_string(Category c) { return name_of(c, kCategories); }
std::string_view to_string(EventType t) { return name_of(t, kEventTypes); }
std::string_view to_string(Delivery d) { return name_of(d, kDeliveries); }
std::string_view to_string(Voice v) { return name_of(v, kVoices); }
std::string_view to_string(Source s) { return name_of(s, kSources); }

std::optional<Category> parse_category(std::string_view s) { return lookup(s, kCategories); }
std::optional<EventType> parse_event_type(std::string_view s) { return lookup(s, kEventTypes); }
std::optional<Delivery> parse_delivery(std::string_view s) { return lookup(s, kDeliveries); }
std::optional<Voice> parse_voice(std::string_view s) { return lookup(s, kVoices); }
std::optional<Source> parse_source(std::string_view s) { return lookup(s, kSources); }

void MediaAsset::check() const {
  if (!(duration >= 0.0) || !std::isfinite(duration)) {
    throw InvalidArgument("asset " + asset_id + ": duration must be finite and >= 0");
  }
  if (!(fps > 0.0) || !std::isfinite(fps)) {
    throw InvalidArgument("asset " + asset_id + ": fps must be > 0");
  }
}

const ADEvent* Track::find(std::string_view event_id) const {
  for (const auto& e : events) {
    if (e.event_id == event_id) return &e;
  }
  return nullptr;
}

ADEvent* Track::find(std::string_view event_id) {
  for (auto& e : events) {
    if (e.event_id == event_id) return &e;
  }
  return nullptr;
}

Voice voice_for(EventType type) {
  return type == EventType::Visual ? Voice::Female : Voice::Male;
}

bool canonical_less(const ADEvent& a, const ADEvent& b) {
  if (a.start_time != b.start_time) return a.start_time < b.start_time;
  return a.event_id < b.event_id;
}

void canonicalize(Track& track) {
  std::stable_sort(track.events.begin(), track.events.end(), canonical_less);
}

std::vector<Violation> validate_structure(const Track& track) {
  std::vector<Violation> out;
  const auto order = sorted_view(track);

  std::set<std::string_view> seen;
  for (const ADEvent* e : order) {
    if (e->event_id.empty()) out.push_back({"", "missing_event_id", "event_id is empty"});
    if (!seen.insert(e->event_id).second) {
      out.push_back({e->event_id, "duplicate_event_id", "event_id appears more than once"});
    }
    if (!std::isfinite(e->start_time) || e->start_time < 0.0) {
      out.push_back({e->event_id, "start_out_of_range", "start_time must be >= 0"});
    }
    if (detail::trim(e->text).empty()) {
      out.push_back({e->event_id, "empty_text", "text is empty after trimming"});
    }
    if (!std::isfinite(e->estimated_duration) || e->estimated_duration < 0.0) {
      out.push_back({e->event_id, "negative_duration", "estimated_duration must be >= 0"});
    }
    if (e->voice != voice_for(e->event_type)) {
      out.push_back({e->event_id, "voice_mismatch",
                     std::string(to_string(e->event_type)) + " events use the " +
                         std::string(to_string(voice_for(e->event_type))) + " voice"});
    }
  }

  // Inline audible intervals; sorted by start so only earlier, still-open intervals can clash.
  std::vector<const ADEvent*> open;
  for (const ADEvent* e : order) {
    if (e->delivery != Delivery::Inline) continue;
    for (const ADEvent* prev : open) {
      if (prev->end_time() > e->start_time && e->end_time() > prev->start_time &&
          prev->estimated_duration > 0.0 && e->estimated_duration > 0.0) {
        out.push_back({e->event_id, "inline_overlap", "overlaps inline event " + prev->event_id});
      }
    }
    open.erase(std::remove_if(open.begin(), open.end(),
                              [&](const ADEvent* p) { return p->end_time() <= e->start_time; }),
               open.end());
    open.push_back(e);
  }

  const ADEvent* last_extended = nullptr;
  for (const ADEvent* e : order) {
    if (e->delivery != Delivery::Extended) continue;
    if (last_extended && last_extended->start_time == e->start_time) {
      out.push_back({e->event_id, "extended_same_start",
                     "shares start_time with extended event " + last_extended->event_id});
    }
    last_extended = e;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Violation> validate_track(const Track& track, const MediaAsset& asset) {
  if (track.asset_id != asset.asset_id) {
    throw AssetMismatch("track " + track.track_id + " references asset '" + track.asset_id +
                        "', not '" + asset.asset_id + "'");
  }
  auto out = validate_structure(track);
  for (const auto& e : track.events) {
    if (e.start_time > asset.duration) {
      out.push_back({e.event_id, "start_out_of_range",
                     "start_time " + detail::fixed(e.start_time, 3) + " exceeds asset duration " +
                         detail::fixed(asset.duration, 3)});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Violation> track_warnings(const Track& track) {
  std::vector<Violation> out;
  const auto order = sorted_view(track);
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size() && order[j]->start_time == order[i]->start_time;
         ++j) {
      if (order[i]->delivery != order[j]->delivery) {
        out.push_back({order[j]->event_id, "inline_extended_collision",
                       "starts together with " + order[i]->event_id});
      }
    }
  }
  return out;
}

void require_valid(const Track& track, const MediaAsset& asset) {
  auto v = validate_track(track, asset);
  if (!v.empty()) throw ValidationFailed(std::move(v));
}

std::string format_vtt_timestamp(Seconds t) {
  long long ms = std::llround(std::max(0.0, t) * 1000.0);
  long long h = ms / 3'600'000;
  ms %= 3'600'000;
  long long m = ms / 60'000;
  ms %= 60'000;
  long long s = ms / 1000;
  ms %= 1000;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld.%03lld", h, m, s, ms);
  return buf;
}

std::string export_webvtt(const Track& track) {
  auto violations = validate_structure(track);
  if (!violations.empty()) throw ValidationFailed(std::move(violations));
  std::string out = "WEBVTT\n";
  for (const ADEvent* e : sorted_view(track)) {
    out += "\n";
    out += e->event_id + "\n";
    out += format_vtt_timestamp(e->start_time) + " --> " + format_vtt_timestamp(e->end_time()) +
           "\n";
    if (e->delivery == Delivery::Extended) out += "[EXTENDED] ";
    out += e->text + "\n";
  }
  return out;
}

Json to_json(const ADEvent& e) {
  Json j;
  j["event_id"] = e.event_id;
  j["start_time"] = e.start_time;
  j["event_type"] = to_string(e.event_type);
  j["delivery"] = to_string(e.delivery);
  j["text"] = e.text;
  j["voice"] = to_string(e.voice);
  j["estimated_duration"] = e.estimated_duration;
  j["source"] = to_string(e.source);
  j["audio_uri"] = e.audio_uri ? Json(*e.audio_uri) : Json(nullptr);
  return j;
}

ADEvent event_from_json(const Json& j) {
  constexpr std::string_view what = "event";
  ADEvent e;
  e.event_id = detail::get_string(j, "event_id", what);
  e.start_time = detail::get_number(j, "start_time", what);
  e.event_type = parse_enum_field(j, "event_type", what, kEventTypes);
  e.delivery = parse_enum_field(j, "delivery", what, kDeliveries);
  e.text = detail::get_string(j, "text", what);
  e.voice = parse_enum_field(j, "voice", what, kVoices);
  e.estimated_duration = detail::get_number(j, "estimated_duration", what);
  e.source = parse_enum_field(j, "source", what, kSources);
  e.audio_uri = detail::get_optional_string(j, "audio_uri", what);
  return e;
}

Json to_json(const Track& t) {
  Json j;
  j["schema_version"] = t.schema_version;
  j["track_id"] = t.track_id;
  j["asset_id"] = t.asset_id;
  Json events = Json::array();
  for (const ADEvent* e : sorted_view(t)) events.push_back(to_json(*e));
  j["events"] = std::move(events);
  return j;
}

Json to_json(const MediaAsset& a) {
  Json j;
  j["asset_id"] = a.asset_id;
  j["title"] = a.title;
  j["category"] = to_string(a.category);
  j["duration"] = a.duration;
  j["fps"] = a.fps;
  Json meta = Json::object();
  for (const auto& [k, v] : a.metadata) meta[k] = v;
  j["metadata"] = std::move(meta);
  return j;
}

MediaAsset asset_from_json(const Json& j) {
  constexpr std::string_view what = "asset";
  MediaAsset a;
  a.asset_id = detail::get_string(j, "asset_id", what);
  a.title = detail::get_optional_string(j, "title", what).value_or("");
  a.category = parse_enum_field(j, "category", what, kCategories);
  a.duration = detail::get_number(j, "duration", what);
  a.fps = detail::get_number(j, "fps", what);
  if (auto it = j.find("metadata"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw ParseError("asset: metadata must be an object", 0);
    for (const auto& [k, v] : it->items()) {
      a.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  try {
    a.check();
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what(), 0);
  }
  return a;
}

std::string export_track(const Track& track) { return detail::dump(to_json(track)); }

Track import_track(std::string_view bytes) {
  constexpr std::string_view what = "track";
  Json doc = detail::parse_json(bytes, what);
  if (!doc.is_object()) throw ParseError("track: document must be an object", 0);
  const int version = static_cast<int>(detail::get_integer(doc, "schema_version", what));
  if (version != kTrackSchemaVersion) throw VersionError(version);
  Track t;
  t.schema_version = version;
  t.track_id = detail::get_optional_string(doc, "track_id", what).value_or("");
  t.asset_id = detail::get_string(doc, "asset_id", what);
  const Json& events = detail::require(doc, "events", what);
  if (!events.is_array()) throw ParseError("track: events must be an array", 0);
  for (const auto& ev : events) t.events.push_back(event_from_json(ev));
  canonicalize(t);
  return t;
}

MediaAsset import_asset(std::string_view bytes) {
  return asset_from_json(detail::parse_json(bytes, "asset"));
}

}  // namespace adx3
