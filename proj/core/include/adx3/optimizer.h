// Inline/extended delivery decisions: condense into dialogue gaps, retry, necessity
// filtering for extended candidates, how-to merging, and final conflict-free assembly.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "adx3/duration.h"
#include "adx3/model.h"
#include "adx3/providers.h"
#include "adx3/segmentation.h"
#include "adx3/templates.h"
#include "adx3/transcript.h"

namespace adx3 {

struct OptimizerParams {
  int max_retries = 2;
  Seconds min_utterance = 0.5;
  Seconds lookback = 2.0;
  DurationModel duration;
  RetryPolicy retry;
  const TemplateStore* templates = &TemplateStore::builtin();
};

struct ScheduleDecision {
  std::vector<std::string> event_ids;
  Delivery delivery = Delivery::Inline;
  std::optional<Gap> assigned_gap;
  std::string final_text;
  int attempts = 0;
};

struct InlineFailure {
  std::vector<std::string> event_ids;
  int attempts = 0;
  std::string cause;
};

using InlineOutcome = std::variant<ScheduleDecision, InlineFailure>;

std::string build_inline_prompt(std::string_view combined_text, Seconds available,
                                const TemplateStore& templates = TemplateStore::builtin());
std::string build_retry_prompt(std::string_view previous_text, Seconds tts_duration,
                               Seconds available,
                               const TemplateStore& templates = TemplateStore::builtin());

/// Asks for a shorter rewrite. Requires tts_duration > available (InvalidArgument otherwise);
/// an empty reply raises ProviderError.
std::string retry_shorten(std::string_view previous_text, Seconds tts_duration, Seconds available,
                          VlmProvider& provider, const OptimizerParams& params = {});

/// Condenses `events` into one utterance that fits `gap`, with up to max_retries shortening
/// rounds. Gaps shorter than min_utterance fail without any provider call.
InlineOutcome optimize_inline(std::span<const ADEvent> events, const Gap& gap,
                              VlmProvider& provider, const OptimizerParams& params = {});

struct FilterContext {
  std::string scene_transcript;
  std::string cumulative_transcript;
  std::string cumulative_descriptions;
};

struct NecessityVerdict {
  int id = 0;
  bool necessary = false;
  std::string reason;
};

/// Candidates are listed as "[id] text" lines, ids counting from 0 in input order.
std::string build_filter_prompt(const FilterContext& ctx, std::span<const ADEvent> candidates,
                                const TemplateStore& templates = TemplateStore::builtin());

/// First JSON array of {id, necessary[, reason]} objects; elements lacking id or necessary
/// are skipped. Throws ProviderFormatError when no such array exists.
std::vector<NecessityVerdict> parse_necessity(std::string_view reply);

struct FilterResult {
  std::vector<ADEvent> kept;
  /// Parallel to the candidate list: verdict reason, or why the candidate was not kept.
  std::vector<std::string> reasons;
  int calls = 0;
};

/// Keeps candidates marked necessary, at most one visual one (the lowest id). An unparseable
/// reply is re-asked once; a second failure or a transport failure keeps nothing.
FilterResult filter_extended(std::span<const ADEvent> candidates, const FilterContext& ctx,
                             VlmProvider& provider, const OptimizerParams& params = {});

/// Whitespace tokens containing a digit, with surrounding punctuation removed ("4-5", "350°F").
std::vector<std::string> measurement_tokens(std::string_view text);

/// True when every measurement token of every input appears verbatim in `reply`.
bool preserves_measurements(std::span<const ADEvent> inputs, std::string_view reply);

/// The merge template followed by the scene's on-screen text and visual lines.
std::string build_merge_prompt(std::span<const ADEvent> scene_events, Seconds available_scene_time,
                               const TemplateStore& templates = TemplateStore::builtin());

struct MergeOutcome {
  std::optional<ADEvent> merged;
  int calls = 0;
  std::string note;
};

/// One visual event combining a how-to scene's text and visual events. Requires at least one
/// of each; falls back (merged empty) on provider failure or when a re-asked reply still
/// drops a measurement.
MergeOutcome merge_howto(std::span<const ADEvent> scene_events, Seconds available_scene_time,
                         VlmProvider& provider, const OptimizerParams& params = {});

struct DecisionRecord {
  std::string event_id;
  std::string outcome;  // inline | extended | dropped | merged | demoted_extended | demoted_dropped
  int attempts = 0;
  std::string reason;
  bool operator==(const DecisionRecord&) const = default;
};

/// Per-window trace; windows are the unit the retry bound applies to.
struct WindowTrace {
  std::size_t gap_index = 0;
  EventType event_type = EventType::Visual;
  std::vector<std::string> event_ids;
  Gap available;
  int attempts = 0;
  bool placed_inline = false;
};

struct ScheduleResult {
  Track track;
  std::vector<DecisionRecord> log;
  std::vector<WindowTrace> windows;
};

/// Full delivery pass over a raw generated track.
///
/// Each event is assigned to the first gap that still has time at or after
/// (start - lookback) and opens before the end of the event's scene. Events sharing a gap,
/// scene and event type form a window; windows in one gap are packed left to right. Failed windows
/// and gapless events go through the necessity filter once per scene, and survivors become
/// extended events at their original start time.
ScheduleResult schedule(const Track& raw_track, std::span<const Gap> gaps, const MediaAsset& asset,
                        std::span<const Scene> scenes, const MergedTranscript& transcript,
                        VlmProvider& provider, const OptimizerParams& params = {});

/// Demotes the listed inline events (their synthesized audio no longer fits) to extended
/// candidates and filters them per scene. Audio and measured durations are kept.
ScheduleResult repass_after_synthesis(const Track& synthesized,
                                      std::span<const std::string> demote_ids,
                                      const MediaAsset& asset, std::span<const Scene> scenes,
                                      const MergedTranscript& transcript, VlmProvider& provider,
                                      const OptimizerParams& params = {});

Json to_json(const DecisionRecord& r);
std::string export_decision_log(std::span<const DecisionRecord> log);

}  // namespace adx3
