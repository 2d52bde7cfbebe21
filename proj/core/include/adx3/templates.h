// Versioned prompt templates and a small renderer for their {slot} / {slot:.Nf} syntax.
#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace adx3 {

enum class PromptId {
  Guidelines,
  GuidelinesPrompt,
  SceneGeneration,
  InlineOptimization,
  RetryOptimization,
  ExtendedFilter,
  HowtoMerge,
  AdaptDescribe,
  AdaptQuestion,
};

inline constexpr std::size_t kPromptCount = 9;
inline constexpr int kTemplateVersion = 1;

/// File stem for a template ("scene_generation" -> scene_generation.txt).
std::string_view template_name(PromptId id);

using TemplateValue = std::variant<std::string, double>;
using TemplateValues = std::map<std::string, TemplateValue, std::less<>>;

/// Substitutes `{key}` and `{key:.Nf}` placeholders; `{{` and `}}` are literal braces.
/// The key is everything before the first ':' verbatim, so expression-like keys such as
/// "tts_duration - available_duration" are plain lookups. Throws TemplateError on a missing
/// value, an unterminated placeholder, or an unsupported format spec.
std::string render_template(std::string_view tpl, const TemplateValues& values);

/// Placeholder keys in order of first appearance.
std::vector<std::string> template_placeholders(std::string_view tpl);

class TemplateStore {
 public:
  /// Templates compiled into the library from core/templates/.
  static const TemplateStore& builtin();

  /// Reads <dir>/<name>.txt for every template. Throws TemplateError if one is missing.
  static TemplateStore load(const std::filesystem::path& dir);

  const std::string& text(PromptId id) const { return texts_[static_cast<std::size_t>(id)]; }
  std::string render(PromptId id, const TemplateValues& values) const;

 private:
  std::array<std::string, kPromptCount> texts_;
};

}  // namespace adx3
