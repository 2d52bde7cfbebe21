// End-to-end generation: segmentation, transcript ensemble, generation, delivery
// optimization, synthesis, and mix planning, driven by one config file.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "adx3/adaptad.h"
#include "adx3/genad.h"
#include "adx3/model.h"
#include "adx3/optimizer.h"
#include "adx3/providers.h"
#include "adx3/segmentation.h"
#include "adx3/synthesis.h"
#include "adx3/transcript.h"

namespace adx3 {

/// A pipeline stage failed. exit_code follows the CLI convention (2 input, 3 environment,
/// 1 anything else).
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message, int exit_code)
      : Error(stage + ": " + message), stage_(std::move(stage)), exit_code_(exit_code) {}
  const std::string& stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

struct PipelineInputs {
  std::filesystem::path asset;
  std::filesystem::path embeddings;
  std::filesystem::path primary_transcript;
  std::filesystem::path secondary_transcript;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path storage_dir = "adx3-store";
};

struct PipelineConfig {
  /// Directory relative paths in the file were resolved against.
  std::filesystem::path base_dir = ".";
  PipelineInputs inputs;
  ProviderConfig vlm;
  ProviderConfig tts;
  /// Names of the speech recognizers that produced the transcript files (recorded only).
  std::string asr_primary = "primary";
  std::string asr_secondary = "secondary";
  SegmentationParams segmentation;
  EnsembleParams ensemble;
  double words_per_minute = 150.0;
  int max_retries = 2;
  Seconds min_utterance = 0.5;
  Seconds lookback = 2.0;
  double duck_db = kDefaultDuckDb;
  int retry_attempts = 3;
  int retry_base_delay_ms = 200;
  std::optional<std::filesystem::path> templates_dir;
  std::filesystem::path output_dir = "out";
  ServiceConfig service;
};

/// Parses a config document; relative paths are resolved against `base_dir`.
PipelineConfig parse_pipeline_config(const Json& j, const std::filesystem::path& base_dir);
/// Reads and parses a config file. Throws StageError("config", ..., 2).
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct PipelineResult {
  MediaAsset asset;
  std::vector<FrameEmbedding> frames;
  std::vector<Scene> scenes;
  MergedTranscript transcript;
  std::vector<Gap> gaps;
  GenadResult genad;
  ScheduleResult schedule;
  SynthesisResult synthesis;
  Track track;
  std::vector<DecisionRecord> decisions;
  MixPlan mix_plan;

  AdaptContext adapt_context() const;
};

struct PipelineOverrides {
  std::optional<double> words_per_minute;
  std::optional<int> max_retries;
  std::optional<Seconds> min_utterance;
};

void apply_overrides(PipelineConfig& config, const PipelineOverrides& overrides);

/// Stage names in execution order.
std::vector<std::string> pipeline_stages();
/// Human-readable plan of what a run would read, do, and write.
std::string describe_plan(const PipelineConfig& config);

/// Runs every stage with providers built from the config. Throws StageError.
PipelineResult run_pipeline(const PipelineConfig& config);
/// Same, with caller-supplied providers.
PipelineResult run_pipeline(const PipelineConfig& config, const MediaAsset& asset,
                            VlmProvider& vlm, TtsProvider& tts);

MediaAsset load_asset(const PipelineConfig& config);

/// Output file names inside the output directory.
inline constexpr std::string_view kTrackFile = "track.json";
inline constexpr std::string_view kDecisionFile = "decisions.jsonl";
inline constexpr std::string_view kMixPlanFile = "mixplan.json";
inline constexpr std::string_view kScenesFile = "scenes.json";
inline constexpr std::string_view kTranscriptFile = "transcript.json";
inline constexpr std::string_view kContextFile = "context.json";

/// Writes every output file; returns the paths written.
std::vector<std::filesystem::path> write_outputs(const PipelineResult& result,
                                                 const std::filesystem::path& output_dir);

}  // namespace adx3
