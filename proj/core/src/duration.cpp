#include "adx3/duration.h"

#include <algorithm>
#include <cctype>

namespace adx3 {

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char ch : text) {
    const bool space = std::isspace(static_cast<unsigned char>(ch)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

Seconds DurationModel::estimate(std::string_view text) const {
  if (!(words_per_minute > 0.0)) throw InvalidArgument("DurationModel: words_per_minute must be > 0");
  const Seconds by_words = static_cast<double>(count_words(text)) / (words_per_minute / 60.0);
  const Seconds by_chars = static_cast<double>(text.size()) * per_character_floor;
  return std::max(by_words, by_chars);
}

}  // namespace adx3
