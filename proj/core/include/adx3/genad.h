// Scene-by-scene description generation with accumulated cross-scene context.
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adx3/duration.h"
#include "adx3/model.h"
#include "adx3/providers.h"
#include "adx3/segmentation.h"
#include "adx3/templates.h"
#include "adx3/transcript.h"

namespace adx3 {

/// Everything the scene prompt's {context} slot is built from.
struct SceneContext {
  std::string metadata;
  std::string cumulative_transcript;
  std::string cumulative_descriptions;
  std::string current_transcript;
  Seconds scene_duration = 0.0;
};

/// One element of the provider's JSON array.
struct RawEventRecord {
  Seconds start_time = 0.0;
  std::string type;  // "Text on Screen" | "Visual"
  std::string text;
};

struct GenadOptions {
  const TemplateStore* templates = &TemplateStore::builtin();
  RetryPolicy retry;
  DurationModel duration;
};

enum class SceneOutcome { Ok, Reasked, FormatFailed, Skipped };
std::string_view to_string(SceneOutcome o);

struct SceneRunRecord {
  int scene_index = 0;
  SceneOutcome outcome = SceneOutcome::Ok;
  std::size_t events = 0;
  std::string detail;
};

struct GenadResult {
  Track track;
  std::vector<SceneRunRecord> scene_log;
  /// Context used for each scene, in scene order.
  std::vector<SceneContext> contexts;
};

/// Title, category, and free-form metadata as a labeled block.
std::string metadata_text(const MediaAsset& asset);

/// Labeled context sections in fixed order; empty cumulative sections are omitted.
std::string render_context(const SceneContext& ctx);

std::string build_guidelines_prompt(const TemplateStore& templates = TemplateStore::builtin());
std::string build_scene_prompt(const SceneContext& ctx,
                               const TemplateStore& templates = TemplateStore::builtin());

/// True when the reply contains the word "YES" (case-insensitive, whole word).
bool is_acknowledgment(std::string_view reply);

/// Sends the guidelines prompt, retrying once on a missing acknowledgment.
/// Throws GuidelinesNotAcknowledged.
void acknowledge_guidelines(VlmProvider& provider, const GenadOptions& options = {});

/// Every top-level JSON array of event records found in `raw`, concatenated.
/// Throws ProviderFormatError when none parses.
std::vector<RawEventRecord> extract_event_records(std::string_view raw);

/// Maps records to events inside `scene`. Times below scene.start are scene-relative; all
/// times are clamped into [scene.start, scene.end]. Records with empty text or an unknown
/// type are dropped. Event ids are "s<scene>-e<n>" in output order.
std::vector<ADEvent> parse_events(std::string_view raw, const Scene& scene);

/// Keyframe plus first and last sampled frames of the scene, deduplicated, in that order.
std::vector<ImageRef> scene_images(const Scene& scene, std::span<const FrameEmbedding> frames);

GenadResult run_genad(const MediaAsset& asset, std::span<const Scene> scenes,
                      const MergedTranscript& transcript, std::span<const FrameEmbedding> frames,
                      VlmProvider& provider, const GenadOptions& options = {});

}  // namespace adx3
