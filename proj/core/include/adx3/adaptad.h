// On-demand description and question answering at a paused playback position.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adx3/model.h"
#include "adx3/providers.h"
#include "adx3/segmentation.h"
#include "adx3/templates.h"
#include "adx3/transcript.h"

namespace adx3 {

inline constexpr std::string_view kDescribeQuery = "describe the scene";

/// Everything a query may draw on, as left behind by a generation run.
struct AdaptContext {
  MediaAsset asset;
  std::vector<Scene> scenes;
  /// Frame timestamps and image references; vectors are not needed here.
  std::vector<FrameEmbedding> frames;
  MergedTranscript transcript;
  Track track;
};

struct FramePair {
  ImageRef keyframe;
  ImageRef exact;
};

/// exact = sampled frame nearest pause_time; keyframe = the containing scene's keyframe, or
/// the previous (else next) scene's keyframe when both are the same frame.
/// Throws NoFrames without frames and RangeError outside [0, duration].
FramePair select_frames(Seconds pause_time, std::span<const Scene> scenes,
                        std::span<const FrameEmbedding> frames, const MediaAsset& asset);

/// Metadata, earlier transcript, descriptions and current-scene transcript, limited to
/// material that starts no later than pause_time.
std::string scene_info_text(const AdaptContext& ctx, Seconds pause_time);

/// Cuts at the first '.', '!' or '?' followed by whitespace or the end; adds '.' when the
/// text has no terminator.
std::string first_sentence(std::string_view reply);

/// True when a reply mentions frame numbers or timestamps.
bool mentions_frame_or_timestamp(std::string_view reply);

enum class QueryKind { Describe, Question };
std::string_view to_string(QueryKind k);

struct AdaptReply {
  QueryKind kind = QueryKind::Describe;
  Seconds pause_time = 0.0;
  std::string question;
  std::string text;
  std::optional<std::string> audio_uri;
  long long latency_ms = 0;
  std::string prompt;
  FramePair frames;
};

struct AdaptOptions {
  const TemplateStore* templates = &TemplateStore::builtin();
  RetryPolicy retry;
};

std::string build_describe_prompt(const AdaptContext& ctx, Seconds pause_time,
                                  const FramePair& frames,
                                  const TemplateStore& templates = TemplateStore::builtin());
std::string build_question_prompt(const AdaptContext& ctx, Seconds pause_time,
                                  std::string_view question, const FramePair& frames,
                                  const TemplateStore& templates = TemplateStore::builtin());

/// Provider or TTS failure raises Unavailable. The reply is spoken with the female voice
/// when `tts` is given.
AdaptReply describe_now(const AdaptContext& ctx, Seconds pause_time, VlmProvider& provider,
                        TtsProvider* tts = nullptr, const AdaptOptions& options = {});

/// Re-asks once when the reply mentions frames or timestamps; a second such reply raises
/// Unavailable. An empty question raises InvalidArgument.
AdaptReply answer_question(const AdaptContext& ctx, Seconds pause_time, std::string_view question,
                           VlmProvider& provider, TtsProvider* tts = nullptr,
                           const AdaptOptions& options = {});

Json to_json(const AdaptContext& ctx);
AdaptContext adapt_context_from_json(const Json& j);
Json to_json(const AdaptReply& r);

}  // namespace adx3
