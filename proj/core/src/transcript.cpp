#include "adx3/transcript.h"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "json_util.h"

namespace adx3 {

std::string normalize_token(std::string_view token) {
  std::string out;
  out.reserve(token.size());
  for (char ch : token) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80) {
      out.push_back(ch);
    } else if (std::isalnum(c)) {
      out.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  return out;
}

void validate_words(std::span<const TranscriptWord> words) {
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto& w = words[i];
    if (!(w.end > w.start)) {
      throw InvalidArgument("transcript word '" + w.text + "' at " + detail::fixed(w.start, 3) +
                            ": end must exceed start");
    }
    if (w.confidence && (*w.confidence < 0.0 || *w.confidence > 1.0)) {
      throw InvalidArgument("transcript word '" + w.text + "': confidence outside [0, 1]");
    }
    if (i > 0 && w.start < words[i - 1].end) {
      throw InvalidArgument("transcript word '" + w.text + "' at " + detail::fixed(w.start, 3) +
                            " overlaps or precedes the previous word");
    }
  }
}

MergedTranscript align_and_filter(std::span<const TranscriptWord> primary,
                                  std::span<const TranscriptWord> secondary, Seconds time_tol,
                                  double high_conf) {
  validate_words(primary);
  validate_words(secondary);

  std::vector<std::string> secondary_norm;
  secondary_norm.reserve(secondary.size());
  for (const auto& w : secondary) secondary_norm.push_back(normalize_token(w.text));

  MergedTranscript merged;
  for (const auto& w : primary) {
    const std::string key = normalize_token(w.text);
    bool matched = false;
    if (!key.empty()) {
      auto it = std::lower_bound(
          secondary.begin(), secondary.end(), w.start - time_tol,
          [](const TranscriptWord& s, Seconds v) { return s.start < v; });
      for (; it != secondary.end() && it->start <= w.start + time_tol; ++it) {
        const auto idx = static_cast<std::size_t>(it - secondary.begin());
        if (secondary_norm[idx] == key && std::abs(it->start - w.start) <= time_tol) {
          matched = true;
          break;
        }
      }
    }
    if (matched || (w.confidence && *w.confidence >= high_conf)) {
      TranscriptWord kept = w;
      kept.engine = AsrEngine::Primary;
      merged.words.push_back(std::move(kept));
    }
  }
  return merged;
}

std::vector<Gap> compute_gaps(const MergedTranscript& merged, const MediaAsset& asset,
                              Seconds min_gap) {
  std::vector<Gap> gaps;
  Seconds cursor = 0.0;
  auto emit = [&](Seconds from, Seconds to) {
    if (to > from && to - from >= min_gap) gaps.push_back({from, to});
  };
  for (const auto& w : merged.words) {
    const Seconds ws = std::clamp(w.start, 0.0, asset.duration);
    const Seconds we = std::clamp(w.end, 0.0, asset.duration);
    if (ws > cursor) emit(cursor, ws);
    cursor = std::max(cursor, we);
  }
  emit(cursor, asset.duration);
  return gaps;
}

std::string scene_transcript(const Scene& scene, const MergedTranscript& merged) {
  std::vector<std::string> parts;
  for (const auto& w : merged.words) {
    const Seconds mid = w.midpoint();
    if (mid >= scene.start && mid < scene.end) parts.push_back(w.text);
  }
  return detail::join(parts, " ");
}

std::string transcript_before(const MergedTranscript& merged, Seconds t) {
  std::vector<std::string> parts;
  for (const auto& w : merged.words) {
    if (w.midpoint() < t) parts.push_back(w.text);
  }
  return detail::join(parts, " ");
}

std::string transcript_started_between(const MergedTranscript& merged, Seconds from, Seconds to) {
  std::vector<std::string> parts;
  for (const auto& w : merged.words) {
    if (w.start >= from && w.start <= to) parts.push_back(w.text);
  }
  return detail::join(parts, " ");
}

std::vector<TranscriptWord> parse_words(std::string_view bytes, AsrEngine engine) {
  constexpr std::string_view what = "transcript word";
  std::vector<TranscriptWord> words;
  for (const auto& rec : detail::parse_records(bytes, "transcript")) {
    TranscriptWord w;
    w.text = detail::get_string(rec, "text", what);
    w.start = detail::get_number(rec, "start", what);
    w.end = detail::get_number(rec, "end", what);
    w.engine = engine;
    w.confidence = detail::get_optional_number(rec, "confidence", what);
    words.push_back(std::move(w));
  }
  return words;
}

Json to_json(const MergedTranscript& merged) {
  Json arr = Json::array();
  for (const auto& w : merged.words) {
    Json j;
    j["text"] = w.text;
    j["start"] = w.start;
    j["end"] = w.end;
    j["confidence"] = w.confidence ? Json(*w.confidence) : Json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr;
}

MergedTranscript merged_from_json(const Json& j) {
  MergedTranscript m;
  m.words = parse_words(j.dump(), AsrEngine::Primary);
  return m;
}

}  // namespace adx3
