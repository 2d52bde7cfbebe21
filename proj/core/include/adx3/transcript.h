// Two-engine ASR ensemble: keep cross-checked words, derive dialogue gaps.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adx3/model.h"
#include "adx3/segmentation.h"

namespace adx3 {

enum class AsrEngine { Primary, Secondary };

struct TranscriptWord {
  std::string text;
  Seconds start = 0.0;
  Seconds end = 0.0;
  AsrEngine engine = AsrEngine::Primary;
  std::optional<double> confidence;

  Seconds midpoint() const { return 0.5 * (start + end); }
  bool operator==(const TranscriptWord&) const = default;
};

struct MergedTranscript {
  std::vector<TranscriptWord> words;
  bool operator==(const MergedTranscript&) const = default;
};

struct EnsembleParams {
  Seconds time_tol = 0.5;
  double high_conf = 0.9;
  Seconds min_gap = 0.5;
};

/// Case-folded (ASCII) token with punctuation stripped; UTF-8 multibyte sequences are kept.
std::string normalize_token(std::string_view token);

/// Throws InvalidArgument unless every word has end > start and words are time-ordered and
/// non-overlapping.
void validate_words(std::span<const TranscriptWord> words);

/// Keeps a primary word when a secondary word with the same normalized text starts within
/// `time_tol`, or when its own confidence is at least `high_conf`.
MergedTranscript align_and_filter(std::span<const TranscriptWord> primary,
                                  std::span<const TranscriptWord> secondary, Seconds time_tol,
                                  double high_conf);

/// Maximal word-free intervals of [0, duration] of length >= min_gap.
std::vector<Gap> compute_gaps(const MergedTranscript& merged, const MediaAsset& asset,
                              Seconds min_gap);

/// Words whose midpoint lies in [scene.start, scene.end), space-joined.
std::string scene_transcript(const Scene& scene, const MergedTranscript& merged);

/// Words whose midpoint precedes t.
std::string transcript_before(const MergedTranscript& merged, Seconds t);

/// Words in [from, to] by start time; used where nothing past a pause may leak.
std::string transcript_started_between(const MergedTranscript& merged, Seconds from, Seconds to);

/// JSON array or JSON Lines of {text, start, end[, confidence]}.
std::vector<TranscriptWord> parse_words(std::string_view bytes, AsrEngine engine);

Json to_json(const MergedTranscript& merged);
MergedTranscript merged_from_json(const Json& j);

}  // namespace adx3
