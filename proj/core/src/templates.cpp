#include "adx3/templates.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "adx3/errors.h"

namespace adx3 {

namespace detail {
// Generated from core/templates/*.txt at configure time.
extern const std::string_view kBuiltinTemplates[kPromptCount];
}  // namespace detail

namespace {

constexpr std::string_view kNames[kPromptCount] = {
    "guidelines",         "guidelines_prompt", "scene_generation",
    "inline_optimization", "retry_optimization", "extended_filter",
    "howto_merge",        "adapt_describe",    "adapt_question",
};

// Shortest digits that round-trip, with ".0" on integral values, like Python's str(float).
std::string shortest_repr(double v) {
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  std::string out = buf;
  if (out.find_first_of(".eni") == std::string::npos) out += ".0";
  return out;
}

std::string format_value(const TemplateValue& value, std::string_view spec, std::string_view key) {
  if (spec.empty()) {
    if (const auto* s = std::get_if<std::string>(&value)) return *s;
    return shortest_repr(std::get<double>(value));
  }
  // Only fixed-point precision specs (".Nf") appear in the prompt set.
  if (spec.size() < 3 || spec.front() != '.' || spec.back() != 'f') {
    throw TemplateError("unsupported format spec '" + std::string(spec) + "' for {" +
                        std::string(key) + "}");
  }
  const std::string digits(spec.substr(1, spec.size() - 2));
  if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
    throw TemplateError("unsupported format spec '" + std::string(spec) + "'");
  }
  const auto* number = std::get_if<double>(&value);
  if (!number) throw TemplateError("{" + std::string(key) + "} needs a number for '" +
                                   std::string(spec) + "'");
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.*f", std::stoi(digits), *number);
  return buf;
}

std::string_view strip(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

// A key, or "a - b" over two numeric keys.
std::optional<TemplateValue> lookup(const TemplateValues& values, std::string_view key) {
  if (auto it = values.find(key); it != values.end()) return it->second;
  const std::size_t minus = key.find(" - ");
  if (minus == std::string_view::npos) return std::nullopt;
  auto lhs = values.find(strip(key.substr(0, minus)));
  auto rhs = values.find(strip(key.substr(minus + 3)));
  if (lhs == values.end() || rhs == values.end()) return std::nullopt;
  const auto* a = std::get_if<double>(&lhs->second);
  const auto* b = std::get_if<double>(&rhs->second);
  if (!a || !b) throw TemplateError("{" + std::string(key) + "} needs numeric operands");
  return *a - *b;
}

template <class OnText, class OnSlot>
void scan(std::string_view tpl, OnText&& on_text, OnSlot&& on_slot) {
  std::size_t i = 0;
  while (i < tpl.size()) {
    const char c = tpl[i];
    if (c == '{' && i + 1 < tpl.size() && tpl[i + 1] == '{') {
      on_text(std::string_view("{"));
      i += 2;
    } else if (c == '}' && i + 1 < tpl.size() && tpl[i + 1] == '}') {
      on_text(std::string_view("}"));
      i += 2;
    } else if (c == '{') {
      const std::size_t close = tpl.find('}', i + 1);
      if (close == std::string_view::npos) {
        throw TemplateError("unterminated placeholder at offset " + std::to_string(i));
      }
      std::string_view body = tpl.substr(i + 1, close - i - 1);
      const std::size_t colon = body.find(':');
      std::string_view key = body.substr(0, colon);
      std::string_view spec = colon == std::string_view::npos ? std::string_view{}
                                                              : body.substr(colon + 1);
      on_slot(key, spec);
      i = close + 1;
    } else {
      const std::size_t next = tpl.find_first_of("{}", i + 1);
      const std::size_t stop = next == std::string_view::npos ? tpl.size() : next;
      on_text(tpl.substr(i, stop - i));
      i = stop;
    }
  }
}

}  // namespace

std::string_view template_name(PromptId id) { return kNames[static_cast<std::size_t>(id)]; }

std::string render_template(std::string_view tpl, const TemplateValues& values) {
  std::string out;
  out.reserve(tpl.size() + 256);
  scan(
      tpl, [&](std::string_view text) { out += text; },
      [&](std::string_view key, std::string_view spec) {
        const auto value = lookup(values, key);
        if (!value) throw TemplateError("no value for placeholder {" + std::string(key) + "}");
        out += format_value(*value, spec, key);
      });
  return out;
}

std::vector<std::string> template_placeholders(std::string_view tpl) {
  std::vector<std::string> keys;
  scan(
      tpl, [](std::string_view) {},
      [&](std::string_view key, std::string_view) {
        for (const auto& k : keys) {
          if (k == key) return;
        }
        keys.emplace_back(key);
      });
  return keys;
}

const TemplateStore& TemplateStore::builtin() {
  static const TemplateStore store = [] {
    TemplateStore s;
    for (std::size_t i = 0; i < kPromptCount; ++i) {
      s.texts_[i] = std::string(detail::kBuiltinTemplates[i]);
    }
    return s;
  }();
  return store;
}

TemplateStore TemplateStore::load(const std::filesystem::path& dir) {
  TemplateStore s;
  for (std::size_t i = 0; i < kPromptCount; ++i) {
    const auto path = dir / (std::string(kNames[i]) + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TemplateError("missing template file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    s.texts_[i] = ss.str();
  }
  return s;
}

std::string TemplateStore::render(PromptId id, const TemplateValues& values) const {
  return render_template(text(id), values);
}

}  // namespace adx3
