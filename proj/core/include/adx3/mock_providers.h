// Deterministic providers for tests, fixtures, and offline runs.
#pragma once

#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "adx3/duration.h"
#include "adx3/providers.h"

namespace adx3 {

/// Replies through a caller-supplied function and records every call.
class ScriptedVlm : public VlmProvider {
 public:
  struct Call {
    std::string prompt;
    std::vector<ImageRef> images;
  };
  using Responder = std::function<std::string(const std::string& prompt, std::size_t call_index)>;

  explicit ScriptedVlm(Responder responder, std::string name = "scripted");
  /// Replies with `replies` in order; further calls throw ProviderError.
  static ScriptedVlm sequence(std::vector<std::string> replies);

  std::string generate(const std::string& prompt, std::span<const ImageRef> images) override;
  std::string identity() const override { return name_; }

  std::vector<Call> calls() const;
  std::size_t call_count() const;

 private:
  Responder responder_;
  std::string name_;
  mutable std::mutex mu_;
  std::vector<Call> calls_;
};

/// Content-aware mock used by `kind: mock` configs. It recognises every prompt in the
/// template set and answers plausibly: acknowledges guidelines, replays per-scene event
/// arrays from a fixture, condenses text to fit the stated time budget, and marks every
/// extended candidate necessary.
///
/// Fixture JSON: {"scenes": [[{start_time,type,text}, ...], ...],
///                "describe": "text", "answers": {"question": "reply"}}
class HeuristicVlm : public VlmProvider {
 public:
  explicit HeuristicVlm(Json fixture = Json::object(), DurationModel duration = {},
                        std::string name = "mock-vlm");

  std::string generate(const std::string& prompt, std::span<const ImageRef> images) override;
  std::string identity() const override { return name_; }

 private:
  std::string condense(const std::string& text, Seconds available) const;

  Json fixture_;
  DurationModel duration_;
  std::string name_;
  std::mutex mu_;
  std::size_t scenes_seen_ = 0;
};

/// duration = estimate(text) * scale; uri derived from a hash of voice and text.
class MockTts : public TtsProvider {
 public:
  explicit MockTts(DurationModel duration = {}, double scale = 1.0, std::string name = "mock-tts");

  SynthesizedClip synthesize(const std::string& text, Voice voice) override;
  std::string identity() const override { return name_; }

  /// Texts for which synthesize throws ProviderError.
  void fail_on(std::string text);
  std::size_t call_count() const;

 private:
  DurationModel duration_;
  double scale_;
  std::string name_;
  mutable std::mutex mu_;
  std::vector<std::string> failing_;
  std::size_t calls_ = 0;
};

}  // namespace adx3
