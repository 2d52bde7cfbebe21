#include "adx3/providers.h"

#include <cstdlib>

#include "adx3/http_providers.h"
#include "adx3/mock_providers.h"
#include "json_util.h"

namespace adx3 {

namespace {

std::string resolve_token(const ProviderConfig& c) {
  if (c.auth_env.empty()) return {};
  const char* v = std::getenv(c.auth_env.c_str());
  if (!v) throw EnvironmentError("provider " + c.name + ": environment variable " + c.auth_env + " is not set");
  return v;
}

}  // namespace

ProviderConfig provider_config_from_json(const Json& j) {
  constexpr std::string_view what = "provider config";
  ProviderConfig c;
  c.name = detail::get_optional_string(j, "name", what).value_or("");
  c.kind = detail::get_optional_string(j, "kind", what).value_or("mock");
  c.endpoint = detail::get_optional_string(j, "endpoint", what).value_or("");
  c.auth_env = detail::get_optional_string(j, "auth_env", what).value_or("");
  c.fixture = detail::get_optional_string(j, "fixture", what).value_or("");
  c.duration_scale = detail::get_optional_number(j, "duration_scale", what).value_or(1.0);
  c.timeout_seconds =
      static_cast<int>(detail::get_optional_number(j, "timeout_seconds", what).value_or(60));
  return c;
}

Json to_json(const ProviderConfig& c) {
  Json j;
  j["name"] = c.name;
  j["kind"] = c.kind;
  j["endpoint"] = c.endpoint;
  j["auth_env"] = c.auth_env;
  j["fixture"] = c.fixture;
  j["duration_scale"] = c.duration_scale;
  j["timeout_seconds"] = c.timeout_seconds;
  return j;
}

std::unique_ptr<VlmProvider> make_vlm_provider(const ProviderConfig& config, double wpm) {
  if (config.kind == "mock") {
    Json fixture = Json::object();
    if (!config.fixture.empty()) {
      fixture = detail::parse_json(detail::read_file(config.fixture), "vlm fixture");
    }
    return std::make_unique<HeuristicVlm>(std::move(fixture), DurationModel{wpm, 0.0},
                                          config.name.empty() ? "mock-vlm" : config.name);
  }
  if (config.kind == "http") {
    return std::make_unique<HttpVlmProvider>(config.name, config.endpoint, resolve_token(config),
                                             config.timeout_seconds);
  }
  throw InvalidArgument("unknown vlm provider kind '" + config.kind + "'");
}

std::unique_ptr<TtsProvider> make_tts_provider(const ProviderConfig& config, double wpm) {
  if (config.kind == "mock") {
    return std::make_unique<MockTts>(DurationModel{wpm, 0.0}, config.duration_scale,
                                     config.name.empty() ? "mock-tts" : config.name);
  }
  if (config.kind == "http") {
    return std::make_unique<HttpTtsProvider>(config.name, config.endpoint, resolve_token(config),
                                             config.timeout_seconds);
  }
  throw InvalidArgument("unknown tts provider kind '" + config.kind + "'");
}

}  // namespace adx3
