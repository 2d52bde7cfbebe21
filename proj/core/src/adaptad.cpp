#include "adx3/adaptad.h"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <regex>

#include "adx3/genad.h"
#include "json_util.h"

namespace adx3 {

namespace {

ImageRef image_of(const FrameEmbedding& f) {
  return {f.image_uri.empty() ? "frame://" + std::to_string(f.frame_index) : f.image_uri,
          f.timestamp, f.frame_index};
}

const FrameEmbedding* frame_by_index(std::span<const FrameEmbedding> frames, std::int64_t index) {
  for (const auto& f : frames) {
    if (f.frame_index == index) return &f;
  }
  return nullptr;
}

const FrameEmbedding* keyframe_of(const Scene& scene, std::span<const FrameEmbedding> frames) {
  if (scene.keyframe_index) {
    if (const auto* f = frame_by_index(frames, *scene.keyframe_index)) return f;
  }
  auto pos = nearest_frame(frames, scene.midpoint());
  return pos ? &frames[*pos] : nullptr;
}

std::string words_between(const MergedTranscript& t, Seconds from, Seconds to, bool include_to) {
  std::vector<std::string> out;
  for (const auto& w : t.words) {
    if (w.start >= from && (include_to ? w.start <= to : w.start < to)) out.push_back(w.text);
  }
  return detail::join(out, " ");
}

std::string sentence_or_fail(const std::string& reply) {
  std::string s = first_sentence(reply);
  if (s.empty() || s == ".") throw Unavailable("empty reply from the vision-language model");
  return s;
}

template <class Fn>
AdaptReply timed(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  AdaptReply r = fn();
  r.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
  return r;
}

void speak(AdaptReply& r, TtsProvider* tts) {
  if (!tts) return;
  try {
    r.audio_uri = tts->synthesize(r.text, Voice::Female).audio_uri;
  } catch (const ProviderError& e) {
    throw Unavailable(std::string("speech synthesis failed: ") + e.what());
  }
}

std::string ask(VlmProvider& provider, const std::string& prompt, const FramePair& frames,
                const AdaptOptions& options) {
  const ImageRef images[] = {frames.keyframe, frames.exact};
  try {
    return call_with_backoff(options.retry, [&] { return provider.generate(prompt, images); });
  } catch (const ProviderError& e) {
    throw Unavailable(std::string("vision-language model unavailable: ") + e.what());
  }
}

}  // namespace

FramePair select_frames(Seconds pause_time, std::span<const Scene> scenes,
                        std::span<const FrameEmbedding> frames, const MediaAsset& asset) {
  if (frames.empty()) throw NoFrames("no frames registered for " + asset.asset_id);
  if (!(pause_time >= 0.0 && pause_time <= asset.duration)) {
    throw RangeError("pause time " + detail::fixed(pause_time, 3) + " outside [0, " +
                     detail::fixed(asset.duration, 3) + "]");
  }
  const FrameEmbedding& exact = frames[*nearest_frame(frames, pause_time)];
  FramePair pair{image_of(exact), image_of(exact)};
  const Scene* scene = scene_at(scenes, pause_time);
  if (!scene) return pair;
  const std::size_t pos = static_cast<std::size_t>(scene - scenes.data());
  const FrameEmbedding* key = keyframe_of(*scene, frames);
  if (key && key->frame_index == exact.frame_index) {
    const FrameEmbedding* alt = nullptr;
    if (pos > 0) alt = keyframe_of(scenes[pos - 1], frames);
    if ((!alt || alt->frame_index == exact.frame_index) && pos + 1 < scenes.size()) {
      alt = keyframe_of(scenes[pos + 1], frames);
    }
    if (alt) key = alt;
  }
  if (key) pair.keyframe = image_of(*key);
  return pair;
}

std::string scene_info_text(const AdaptContext& ctx, Seconds pause_time) {
  SceneContext sc;
  sc.metadata = metadata_text(ctx.asset);
  const Scene* scene = scene_at(ctx.scenes, pause_time);
  const Seconds scene_start = scene ? scene->start : 0.0;
  sc.cumulative_transcript = words_between(ctx.transcript, 0.0, scene_start, false);
  sc.current_transcript = words_between(ctx.transcript, scene_start, pause_time, true);
  std::vector<const ADEvent*> events;
  for (const auto& e : ctx.track.events) {
    if (e.start_time <= pause_time) events.push_back(&e);
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const ADEvent* a, const ADEvent* b) { return canonical_less(*a, *b); });
  std::vector<std::string> texts;
  for (const auto* e : events) texts.push_back(e->text);
  sc.cumulative_descriptions = detail::join(texts, "\n");
  return render_context(sc);
}

std::string first_sentence(std::string_view reply) {
  std::string s = detail::trim(reply);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if ((c == '.' || c == '!' || c == '?') &&
        (i + 1 == s.size() || std::isspace(static_cast<unsigned char>(s[i + 1])))) {
      return s.substr(0, i + 1);
    }
  }
  if (s.empty()) return s;
  return s + ".";
}

bool mentions_frame_or_timestamp(std::string_view reply) {
  static const std::regex pattern(R"(frames?\s*(number|no\.?|#)?\s*\d|time\s*-?stamps?)",
                                  std::regex::icase);
  return std::regex_search(reply.begin(), reply.end(), pattern);
}

std::string_view to_string(QueryKind k) { return k == QueryKind::Describe ? "describe" : "question"; }

std::string build_describe_prompt(const AdaptContext& ctx, Seconds pause_time,
                                  const FramePair& frames, const TemplateStore& templates) {
  return templates.render(PromptId::AdaptDescribe,
                          {{"scene_info_text", scene_info_text(ctx, pause_time)},
                           {"query", std::string(kDescribeQuery)},
                           {"keyframe_time", frames.keyframe.timestamp},
                           {"exact_time", frames.exact.timestamp}});
}

std::string build_question_prompt(const AdaptContext& ctx, Seconds pause_time,
                                  std::string_view question, const FramePair& frames,
                                  const TemplateStore& templates) {
  return templates.render(PromptId::AdaptQuestion,
                          {{"scene_info_text", scene_info_text(ctx, pause_time)},
                           {"query", std::string(question)},
                           {"keyframe_time", frames.keyframe.timestamp},
                           {"exact_time", frames.exact.timestamp}});
}

AdaptReply describe_now(const AdaptContext& ctx, Seconds pause_time, VlmProvider& provider,
                        TtsProvider* tts, const AdaptOptions& options) {
  return timed([&] {
    AdaptReply r;
    r.kind = QueryKind::Describe;
    r.pause_time = pause_time;
    r.frames = select_frames(pause_time, ctx.scenes, ctx.frames, ctx.asset);
    r.prompt = build_describe_prompt(ctx, pause_time, r.frames, *options.templates);
    r.text = sentence_or_fail(ask(provider, r.prompt, r.frames, options));
    speak(r, tts);
    return r;
  });
}

AdaptReply answer_question(const AdaptContext& ctx, Seconds pause_time, std::string_view question,
                           VlmProvider& provider, TtsProvider* tts, const AdaptOptions& options) {
  const std::string q = detail::trim(question);
  if (q.empty()) throw InvalidArgument("question must not be empty");
  return timed([&] {
    AdaptReply r;
    r.kind = QueryKind::Question;
    r.pause_time = pause_time;
    r.question = q;
    r.frames = select_frames(pause_time, ctx.scenes, ctx.frames, ctx.asset);
    r.prompt = build_question_prompt(ctx, pause_time, q, r.frames, *options.templates);
    std::string reply = ask(provider, r.prompt, r.frames, options);
    if (mentions_frame_or_timestamp(reply)) {
      reply = ask(provider, r.prompt, r.frames, options);
      if (mentions_frame_or_timestamp(reply)) {
        throw Unavailable("reply kept referring to frame numbers or timestamps");
      }
    }
    r.text = sentence_or_fail(reply);
    speak(r, tts);
    return r;
  });
}

Json to_json(const AdaptContext& ctx) {
  Json j;
  j["asset"] = to_json(ctx.asset);
  j["scenes"] = scenes_to_json(ctx.scenes);
  j["frames"] = Json::array();
  for (const auto& f : ctx.frames) {
    j["frames"].push_back({{"frame_index", f.frame_index}, {"timestamp", f.timestamp},
                           {"image", f.image_uri}});
  }
  j["transcript"] = to_json(ctx.transcript);
  j["track"] = to_json(ctx.track);
  return j;
}

AdaptContext adapt_context_from_json(const Json& j) {
  AdaptContext ctx;
  ctx.asset = asset_from_json(detail::require(j, "asset", "adapt context"));
  ctx.scenes = scenes_from_json(detail::require(j, "scenes", "adapt context"));
  for (const auto& f : detail::require(j, "frames", "adapt context")) {
    FrameEmbedding fe;
    fe.frame_index = detail::get_integer(f, "frame_index", "frame");
    fe.timestamp = detail::get_number(f, "timestamp", "frame");
    fe.image_uri = detail::get_optional_string(f, "image", "frame")
                       .value_or("frame://" + std::to_string(fe.frame_index));
    ctx.frames.push_back(std::move(fe));
  }
  ctx.transcript = merged_from_json(detail::require(j, "transcript", "adapt context"));
  ctx.track = import_track(detail::require(j, "track", "adapt context").dump());
  return ctx;
}

Json to_json(const AdaptReply& r) {
  Json j;
  j["kind"] = std::string(to_string(r.kind));
  j["time"] = r.pause_time;
  if (r.kind == QueryKind::Question) j["question"] = r.question;
  j["text"] = r.text;
  j["audio_uri"] = r.audio_uri ? Json(*r.audio_uri) : Json();
  j["latency_ms"] = r.latency_ms;
  j["frames"] = {{"keyframe", {{"uri", r.frames.keyframe.uri}, {"timestamp", r.frames.keyframe.timestamp}}},
                 {"exact", {{"uri", r.frames.exact.uri}, {"timestamp", r.frames.exact.timestamp}}}};
  return j;
}

}  // namespace adx3
