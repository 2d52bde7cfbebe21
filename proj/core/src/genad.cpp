#include "adx3/genad.h"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "json_util.h"

namespace adx3 {

namespace {

constexpr std::string_view kReaskSuffix = "\n\nReturn only the JSON array.";

// Offset one past the bracket closing the array opened at `open`, skipping string contents.
std::size_t match_array(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::optional<std::vector<RawEventRecord>> as_records(const Json& arr) {
  std::vector<RawEventRecord> out;
  for (const auto& item : arr) {
    if (!item.is_object()) return std::nullopt;
    RawEventRecord r;
    auto st = item.find("start_time");
    if (st == item.end()) return std::nullopt;
    if (st->is_number()) {
      r.start_time = st->get<double>();
    } else if (st->is_string()) {
      char* end = nullptr;
      const std::string& raw = st->get_ref<const std::string&>();
      r.start_time = std::strtod(raw.c_str(), &end);
      if (end == raw.c_str()) return std::nullopt;
    } else {
      return std::nullopt;
    }
    auto ty = item.find("type");
    auto tx = item.find("text");
    if (ty == item.end() || !ty->is_string() || tx == item.end() || !tx->is_string()) {
      return std::nullopt;
    }
    r.type = ty->get<std::string>();
    r.text = tx->get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

std::optional<EventType> record_type(std::string_view type) {
  std::string folded;
  for (char c : type) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      folded.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (folded == "textonscreen") return EventType::TextOnScreen;
  if (folded == "visual") return EventType::Visual;
  return std::nullopt;
}

std::string event_id_for(int scene_index, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%03d-e%02zu", scene_index, n);
  return buf;
}

}  // namespace

std::string_view to_string(SceneOutcome o) {
  switch (o) {
    case SceneOutcome::Ok: return "ok";
    case SceneOutcome::Reasked: return "reasked";
    case SceneOutcome::FormatFailed: return "format_failed";
    case SceneOutcome::Skipped: return "skipped";
  }
  return "?";
}

std::string metadata_text(const MediaAsset& asset) {
  std::string out = "VIDEO METADATA:\nTitle: " + asset.title +
                    "\nCategory: " + std::string(to_string(asset.category));
  for (const auto& [k, v] : asset.metadata) out += "\n" + k + ": " + v;
  return out;
}

std::string render_context(const SceneContext& ctx) {
  std::string out = ctx.metadata;
  if (!ctx.cumulative_transcript.empty()) {
    out += "\n\nCUMULATIVE TRANSCRIPT:\n" + ctx.cumulative_transcript;
  }
  if (!ctx.cumulative_descriptions.empty()) {
    out += "\n\nPREVIOUS DESCRIPTIONS:\n" + ctx.cumulative_descriptions;
  }
  out += "\n\nCURRENT SCENE TRANSCRIPT:\n" +
         (ctx.current_transcript.empty() ? std::string("(no dialogue)") : ctx.current_transcript);
  return out;
}

std::string build_guidelines_prompt(const TemplateStore& templates) {
  return templates.render(PromptId::GuidelinesPrompt,
                          {{"guidelines", templates.text(PromptId::Guidelines)}});
}

std::string build_scene_prompt(const SceneContext& ctx, const TemplateStore& templates) {
  return templates.render(PromptId::SceneGeneration,
                          {{"scene_duration", ctx.scene_duration}, {"context", render_context(ctx)}});
}

bool is_acknowledgment(std::string_view reply) {
  for (std::size_t i = 0; i + 3 <= reply.size(); ++i) {
    auto lower = [&](std::size_t k) {
      return static_cast<char>(std::tolower(static_cast<unsigned char>(reply[k])));
    };
    if (lower(i) != 'y' || lower(i + 1) != 'e' || lower(i + 2) != 's') continue;
    const bool left = i == 0 || !std::isalnum(static_cast<unsigned char>(reply[i - 1]));
    const bool right = i + 3 == reply.size() || !std::isalnum(static_cast<unsigned char>(reply[i + 3]));
    if (left && right) return true;
  }
  return false;
}

void acknowledge_guidelines(VlmProvider& provider, const GenadOptions& options) {
  const std::string prompt = build_guidelines_prompt(*options.templates);
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string reply =
        call_with_backoff(options.retry, [&] { return provider.generate(prompt, {}); });
    if (is_acknowledgment(reply)) return;
  }
  throw GuidelinesNotAcknowledged("provider " + provider.identity() +
                                  " did not acknowledge the guidelines");
}

std::vector<RawEventRecord> extract_event_records(std::string_view raw) {
  std::vector<RawEventRecord> out;
  bool found = false;
  std::size_t pos = 0;
  while ((pos = raw.find('[', pos)) != std::string_view::npos) {
    const std::size_t end = match_array(raw, pos);
    if (end == std::string_view::npos) break;
    try {
      Json arr = Json::parse(raw.substr(pos, end - pos));
      if (auto records = as_records(arr)) {
        found = true;
        for (auto& r : *records) out.push_back(std::move(r));
        pos = end;
        continue;
      }
    } catch (const nlohmann::json::exception&) {
    }
    ++pos;
  }
  if (!found) throw ProviderFormatError("no parseable JSON array of events in provider reply");
  return out;
}

std::vector<ADEvent> parse_events(std::string_view raw, const Scene& scene) {
  std::vector<ADEvent> events;
  for (const auto& r : extract_event_records(raw)) {
    const auto type = record_type(r.type);
    std::string text = detail::trim(r.text);
    if (!type || text.empty()) continue;
    Seconds t = r.start_time;
    if (t < scene.start) t += scene.start;
    t = std::clamp(t, scene.start, scene.end);
    ADEvent e;
    e.start_time = t;
    e.event_type = *type;
    e.delivery = Delivery::Inline;
    e.text = std::move(text);
    e.voice = voice_for(*type);
    e.source = Source::Ai;
    events.push_back(std::move(e));
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const ADEvent& a, const ADEvent& b) { return a.start_time < b.start_time; });
  for (std::size_t i = 0; i < events.size(); ++i) {
    events[i].event_id = event_id_for(scene.scene_index, i);
  }
  return events;
}

std::vector<ImageRef> scene_images(const Scene& scene, std::span<const FrameEmbedding> frames) {
  std::vector<const FrameEmbedding*> picks;
  if (scene.keyframe_index) {
    for (const auto& f : frames) {
      if (f.frame_index == *scene.keyframe_index) picks.push_back(&f);
    }
  }
  const FrameEmbedding* first = nullptr;
  const FrameEmbedding* last = nullptr;
  for (const auto& f : frames) {
    if (f.timestamp >= scene.start && f.timestamp < scene.end) {
      if (!first) first = &f;
      last = &f;
    }
  }
  for (const auto* f : {first, last}) {
    if (f && std::find(picks.begin(), picks.end(), f) == picks.end()) picks.push_back(f);
  }
  std::vector<ImageRef> refs;
  for (const auto* f : picks) refs.push_back({f->image_uri, f->timestamp, f->frame_index});
  return refs;
}

GenadResult run_genad(const MediaAsset& asset, std::span<const Scene> scenes,
                      const MergedTranscript& transcript, std::span<const FrameEmbedding> frames,
                      VlmProvider& provider, const GenadOptions& options) {
  GenadResult result;
  result.track.track_id = asset.asset_id + ":genad";
  result.track.asset_id = asset.asset_id;
  if (scenes.empty()) return result;

  acknowledge_guidelines(provider, options);

  const std::string metadata = metadata_text(asset);
  std::string descriptions;
  for (const auto& scene : scenes) {
    SceneContext ctx;
    ctx.metadata = metadata;
    ctx.cumulative_transcript = transcript_before(transcript, scene.start);
    ctx.cumulative_descriptions = descriptions;
    ctx.current_transcript = scene_transcript(scene, transcript);
    ctx.scene_duration = scene.length();
    result.contexts.push_back(ctx);

    const std::string prompt = build_scene_prompt(ctx, *options.templates);
    const auto images = scene_images(scene, frames);
    SceneRunRecord record{scene.scene_index, SceneOutcome::Ok, 0, {}};
    std::vector<ADEvent> events;
    try {
      auto ask = [&](const std::string& p) {
        return call_with_backoff(options.retry, [&] { return provider.generate(p, images); });
      };
      try {
        events = parse_events(ask(prompt), scene);
      } catch (const ProviderFormatError& first) {
        record.outcome = SceneOutcome::Reasked;
        record.detail = first.what();
        try {
          events = parse_events(ask(prompt + std::string(kReaskSuffix)), scene);
        } catch (const ProviderFormatError& second) {
          record.outcome = SceneOutcome::FormatFailed;
          record.detail = second.what();
        }
      }
    } catch (const ProviderError& e) {
      record.outcome = SceneOutcome::Skipped;
      record.detail = e.what();
      events.clear();
    }

    for (auto& e : events) {
      e.estimated_duration = options.duration.estimate(e.text);
      if (!descriptions.empty()) descriptions += "\n";
      descriptions += e.text;
      result.track.events.push_back(std::move(e));
    }
    record.events = events.size();
    result.scene_log.push_back(std::move(record));
  }
  canonicalize(result.track);
  return result;
}

}  // namespace adx3
