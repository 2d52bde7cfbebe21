// Narration synthesis and the playback mix plan handed to an external mixer.
#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adx3/model.h"
#include "adx3/providers.h"

namespace adx3 {

Voice assign_voice(const ADEvent& event);

/// Sets every event's voice from its type.
void assign_voices(Track& track);

enum class SynthFlagKind { Refit, SynthFailed };
std::string_view to_string(SynthFlagKind k);

struct SynthFlag {
  std::string event_id;
  SynthFlagKind kind = SynthFlagKind::Refit;
  std::string detail;
  bool operator==(const SynthFlag&) const = default;
};

struct SynthesisResult {
  Track track;
  std::vector<SynthFlag> flags;
};

/// Synthesizes every event. Successful events get audio_uri and their measured duration.
/// An inline event is flagged Refit when its clip no longer fits: without `gaps`, when the
/// measured duration exceeds the estimate; with `gaps`, when the clip leaves every gap or
/// runs into the next inline event. Failed events keep their estimate and are flagged.
SynthesisResult synthesize_track(const Track& track, TtsProvider& tts,
                                 std::optional<std::span<const Gap>> gaps = std::nullopt);

enum class MixKind { DuckBegin, DuckEnd, PauseMain, ResumeMain, PlayClip };
std::string_view to_string(MixKind k);
std::optional<MixKind> parse_mix_kind(std::string_view s);

struct MixInstruction {
  Seconds at = 0.0;
  MixKind kind = MixKind::PlayClip;
  std::optional<std::string> clip_uri;
  std::optional<double> duck_db;
  bool operator==(const MixInstruction&) const = default;
};

using MixPlan = std::vector<MixInstruction>;

inline constexpr double kDefaultDuckDb = -12.0;

/// Inline: duck_begin, play_clip at start, duck_end at start + duration. Extended: pause_main,
/// play_clip, resume_main at start (times are on the main timeline). Events without audio are
/// skipped. Throws PlanConflict when extended clips share a start or inline clips overlap.
MixPlan build_mix_plan(const Track& track, double duck_db = kDefaultDuckDb);

/// Structural problems of a plan; empty when times are nondecreasing, ducks do not nest, and
/// every pause_main is followed by exactly one play_clip and a resume_main.
std::vector<std::string> check_mix_plan(const MixPlan& plan);

Json to_json(const MixInstruction& m);
std::string export_mix_plan(const MixPlan& plan);
MixPlan import_mix_plan(std::string_view bytes);

/// Duration of a PCM RIFF/WAVE file from its header (data bytes / byte rate).
/// Throws ParseError for anything that is not a readable WAVE file.
Seconds wav_duration(std::string_view bytes);
Seconds wav_file_duration(const std::filesystem::path& path);

}  // namespace adx3
