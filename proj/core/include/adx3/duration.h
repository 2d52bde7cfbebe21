#pragma once

#include <string_view>

#include "adx3/model.h"

namespace adx3 {

/// Word-rate speech length estimate used before synthesis.
struct DurationModel {
  double words_per_minute = 150.0;
  /// Seconds per character; the estimate never drops below chars * floor.
  Seconds per_character_floor = 0.0;

  Seconds estimate(std::string_view text) const;
};

std::size_t count_words(std::string_view text);

inline Seconds estimate_speech_duration(std::string_view text, const DurationModel& model) {
  return model.estimate(text);
}

}  // namespace adx3
