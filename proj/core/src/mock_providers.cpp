#include "adx3/mock_providers.h"

#include <cstdlib>
#include <sstream>

#include "json_util.h"

namespace adx3 {

namespace {

std::string between(const std::string& s, std::string_view open, std::string_view close) {
  const auto b = s.find(open);
  if (b == std::string::npos) return {};
  const auto from = b + open.size();
  const auto e = s.find(close, from);
  return s.substr(from, e == std::string::npos ? std::string::npos : e - from);
}

double number_after(const std::string& s, std::string_view marker) {
  const auto b = s.find(marker);
  if (b == std::string::npos) return 0.0;
  return std::strtod(s.c_str() + b + marker.size(), nullptr);
}

std::string strip_trailing_punct(std::string w) {
  while (!w.empty() && (w.back() == ',' || w.back() == ';' || w.back() == ':' ||
                        w.back() == '.' || w.back() == '!' || w.back() == '?')) {
    w.pop_back();
  }
  return w;
}

// Section body after a "HEADER:\n" line, up to the next blank line.
std::string section(const std::string& s, std::string_view header) {
  const auto b = s.find(std::string(header) + ":\n");
  if (b == std::string::npos) return {};
  const auto from = b + header.size() + 2;
  const auto e = s.find("\n\n", from);
  return s.substr(from, e == std::string::npos ? std::string::npos : e - from);
}

}  // namespace

ScriptedVlm::ScriptedVlm(Responder responder, std::string name)
    : responder_(std::move(responder)), name_(std::move(name)) {}

ScriptedVlm ScriptedVlm::sequence(std::vector<std::string> replies) {
  return ScriptedVlm([replies = std::move(replies)](const std::string&, std::size_t i) {
    if (i >= replies.size()) throw ProviderError("scripted provider exhausted");
    return replies[i];
  });
}

std::string ScriptedVlm::generate(const std::string& prompt, std::span<const ImageRef> images) {
  std::size_t index;
  {
    std::lock_guard lock(mu_);
    index = calls_.size();
    calls_.push_back({prompt, {images.begin(), images.end()}});
  }
  return responder_(prompt, index);
}

std::vector<ScriptedVlm::Call> ScriptedVlm::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::size_t ScriptedVlm::call_count() const {
  std::lock_guard lock(mu_);
  return calls_.size();
}

HeuristicVlm::HeuristicVlm(Json fixture, DurationModel duration, std::string name)
    : fixture_(std::move(fixture)), duration_(duration), name_(std::move(name)) {}

std::string HeuristicVlm::condense(const std::string& text, Seconds available) const {
  const auto words = detail::split_whitespace(text);
  std::size_t keep = words.size();
  while (keep > 0) {
    std::vector<std::string> prefix(words.begin(), words.begin() + static_cast<long>(keep));
    if (duration_.estimate(detail::join(prefix, " ")) <= available) break;
    --keep;
  }
  if (keep == 0) return detail::join(words, " ");
  std::vector<std::string> prefix(words.begin(), words.begin() + static_cast<long>(keep));
  if (keep < words.size()) prefix.back() = strip_trailing_punct(prefix.back()) + ".";
  return detail::join(prefix, " ");
}

std::string HeuristicVlm::generate(const std::string& prompt, std::span<const ImageRef>) {
  std::lock_guard lock(mu_);
  if (prompt.find("Do you understand these guidelines?") != std::string::npos) {
    return "YES, I understand and will follow these guidelines.";
  }
  if (prompt.find("SCENE DURATION:") != std::string::npos) {
    const std::size_t i = scenes_seen_;
    if (prompt.find("Return only the JSON array") == std::string::npos) ++scenes_seen_;
    if (fixture_.contains("scenes") && i < fixture_["scenes"].size()) {
      return fixture_["scenes"][i].dump();
    }
    return R"([{"start_time": 0.0, "type": "Visual", "text": "The scene continues."}])";
  }
  if (prompt.find("ORIGINAL DESCRIPTIONS: \"") != std::string::npos) {
    const auto b = prompt.find("ORIGINAL DESCRIPTIONS: \"") + 24;
    const auto e = prompt.rfind("\"\n", prompt.find("AVAILABLE TIME:"));
    std::string text = prompt.substr(b, e - b);
    for (auto& c : text) {
      if (c == '\n') c = ' ';
    }
    return condense(text, number_after(prompt, "AVAILABLE TIME: "));
  }
  if (prompt.find("PREVIOUS ATTEMPT: \"") != std::string::npos) {
    const auto b = prompt.find("PREVIOUS ATTEMPT: \"") + 19;
    const auto e = prompt.rfind("\"\n", prompt.find("This description takes"));
    const std::string text = prompt.substr(b, e - b);
    return condense(text, number_after(prompt, "but you only have "));
  }
  if (prompt.find("VISUAL DESCRIPTIONS TO EVALUATE:") != std::string::npos) {
    const std::string block = between(prompt, "VISUAL DESCRIPTIONS TO EVALUATE:\n", "EVALUATION");
    Json out = Json::array();
    std::istringstream lines(block);
    std::string line;
    while (std::getline(lines, line)) {
      const auto t = detail::trim(line);
      if (t.size() < 3 || t.front() != '[') continue;
      Json item;
      item["id"] = std::atoi(t.c_str() + 1);
      item["necessary"] = true;
      item["reason"] = "conveys visual detail absent from the audio";
      out.push_back(std::move(item));
    }
    return out.dump();
  }
  if (prompt.find("Combine the text on screen and visual elements") != std::string::npos) {
    std::vector<std::string> parts;
    std::istringstream lines(prompt.substr(prompt.find("TEXT ON SCREEN:")));
    std::string line;
    while (std::getline(lines, line)) {
      if (line.rfind("- ", 0) == 0) parts.push_back(strip_trailing_punct(line.substr(2)));
    }
    return detail::join(parts, ", ") + ".";
  }
  if (prompt.find("VIDEO SCENE CONTEXT:") != std::string::npos) {
    const std::string query = detail::trim(between(prompt, "USER QUERY: ", "\n"));
    if (query == "describe the scene") {
      if (fixture_.contains("describe")) return fixture_["describe"].get<std::string>();
      const std::string prior = section(prompt, "PREVIOUS DESCRIPTIONS");
      if (prior.empty()) return "Nothing else is visible yet.";
      const auto last_nl = prior.rfind('\n');
      return detail::trim(last_nl == std::string::npos ? prior : prior.substr(last_nl + 1));
    }
    if (fixture_.contains("answers") && fixture_["answers"].contains(query)) {
      return fixture_["answers"][query].get<std::string>();
    }
    return "That is not visible in this scene.";
  }
  throw ProviderFormatError("mock provider: unrecognised prompt");
}

MockTts::MockTts(DurationModel duration, double scale, std::string name)
    : duration_(duration), scale_(scale), name_(std::move(name)) {}

SynthesizedClip MockTts::synthesize(const std::string& text, Voice voice) {
  {
    std::lock_guard lock(mu_);
    ++calls_;
    for (const auto& f : failing_) {
      if (f == text) throw ProviderError("mock tts: scripted failure");
    }
  }
  if (detail::trim(text).empty()) throw ProviderError("mock tts: empty text");
  SynthesizedClip clip;
  clip.duration = duration_.estimate(text) * scale_;
  clip.audio_uri = "mock://tts/" + std::string(to_string(voice)) + "/" +
                   detail::hex64(detail::fnv1a64(std::string(to_string(voice)) + "\n" + text)) +
                   ".wav";
  return clip;
}

void MockTts::fail_on(std::string text) {
  std::lock_guard lock(mu_);
  failing_.push_back(std::move(text));
}

std::size_t MockTts::call_count() const {
  std::lock_guard lock(mu_);
  return calls_;
}

}  // namespace adx3
