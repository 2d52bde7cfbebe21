// Pluggable model providers. The engine only ever talks to these interfaces.
#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <type_traits>

#include "adx3/errors.h"
#include "adx3/model.h"

namespace adx3 {

/// A frame handed to a vision-language model alongside the prompt.
struct ImageRef {
  std::string uri;
  Seconds timestamp = 0.0;
  std::int64_t frame_index = -1;
  bool operator==(const ImageRef&) const = default;
};

class VlmProvider {
 public:
  virtual ~VlmProvider() = default;
  /// Throws ProviderError on transport failure.
  virtual std::string generate(const std::string& prompt, std::span<const ImageRef> images) = 0;
  virtual std::string identity() const = 0;
};

struct SynthesizedClip {
  std::string audio_uri;
  Seconds duration = 0.0;
};

class TtsProvider {
 public:
  virtual ~TtsProvider() = default;
  virtual SynthesizedClip synthesize(const std::string& text, Voice voice) = 0;
  virtual std::string identity() const = 0;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds base_delay{200};
  /// Injected so tests never sleep; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;
};

/// Runs `fn`, retrying ProviderError with exponential backoff (base, 2*base, ...).
/// The last ProviderError is rethrown once attempts are exhausted.
template <class Fn>
auto call_with_backoff(const RetryPolicy& policy, Fn&& fn) -> std::invoke_result_t<Fn&> {
  const int attempts = policy.attempts < 1 ? 1 : policy.attempts;
  auto delay = policy.base_delay;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const ProviderError&) {
      if (attempt >= attempts) throw;
    }
    if (delay.count() > 0) {
      if (policy.sleep) {
        policy.sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
    }
    delay *= 2;
  }
}

/// Provider selection as it appears in a pipeline config file.
struct ProviderConfig {
  std::string name;
  /// "mock" or "http".
  std::string kind = "mock";
  std::string endpoint;
  /// Environment variable holding the bearer token; empty for none.
  std::string auth_env;
  /// Mock VLM: optional JSON scene fixture. Mock TTS: unused.
  std::string fixture;
  /// Mock TTS: measured duration = estimate * duration_scale.
  double duration_scale = 1.0;
  int timeout_seconds = 60;
};

ProviderConfig provider_config_from_json(const Json& j);
Json to_json(const ProviderConfig& c);

/// Builds a provider for `config`. Throws InvalidArgument for an unknown kind and
/// EnvironmentError when the auth environment variable is unset.
std::unique_ptr<VlmProvider> make_vlm_provider(const ProviderConfig& config, double wpm);
std::unique_ptr<TtsProvider> make_tts_provider(const ProviderConfig& config, double wpm);

}  // namespace adx3
