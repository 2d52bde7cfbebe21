#include "adx3/http_providers.h"

#include <httplib.h>

#include "json_util.h"

namespace adx3 {

namespace {

Json post_json(const HttpEndpoint& ep, const std::string& token, int timeout_seconds,
               const Json& body, std::string_view who) {
  httplib::Client client(ep.scheme_host_port);
  client.set_connection_timeout(timeout_seconds, 0);
  client.set_read_timeout(timeout_seconds, 0);
  client.set_write_timeout(timeout_seconds, 0);
  httplib::Headers headers;
  if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
  auto res = client.Post(ep.path, headers, body.dump(), "application/json");
  if (!res) {
    throw ProviderError(std::string(who) + ": request failed (" +
                        httplib::to_string(res.error()) + ")");
  }
  if (res->status < 200 || res->status >= 300) {
    throw ProviderError(std::string(who) + ": HTTP " + std::to_string(res->status));
  }
  try {
    return Json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string(who) + ": malformed response body: " + e.what());
  }
}

}  // namespace

HttpEndpoint parse_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("endpoint needs a scheme: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw InvalidArgument("unsupported endpoint scheme '" + scheme + "'");
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw InvalidArgument("https endpoints need OpenSSL support");
#endif
  const auto path_start = url.find('/', scheme_end + 3);
  HttpEndpoint ep;
  ep.scheme_host_port = url.substr(0, path_start);
  ep.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (ep.scheme_host_port.size() <= scheme_end + 3) {
    throw InvalidArgument("endpoint has no host: " + url);
  }
  return ep;
}

HttpVlmProvider::HttpVlmProvider(std::string name, const std::string& endpoint,
                                 std::string bearer_token, int timeout_seconds)
    : name_(std::move(name)),
      endpoint_(parse_endpoint(endpoint)),
      token_(std::move(bearer_token)),
      timeout_seconds_(timeout_seconds) {}

std::string HttpVlmProvider::generate(const std::string& prompt,
                                      std::span<const ImageRef> images) {
  Json body;
  body["prompt"] = prompt;
  Json refs = Json::array();
  for (const auto& img : images) refs.push_back(img.uri);
  body["images"] = std::move(refs);
  Json reply = post_json(endpoint_, token_, timeout_seconds_, body, name_);
  if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
    throw ProviderError(name_ + ": response lacks a string 'text' field");
  }
  return reply["text"].get<std::string>();
}

HttpTtsProvider::HttpTtsProvider(std::string name, const std::string& endpoint,
                                 std::string bearer_token, int timeout_seconds)
    : name_(std::move(name)),
      endpoint_(parse_endpoint(endpoint)),
      token_(std::move(bearer_token)),
      timeout_seconds_(timeout_seconds) {}

SynthesizedClip HttpTtsProvider::synthesize(const std::string& text, Voice voice) {
  Json body;
  body["text"] = text;
  body["voice"] = to_string(voice);
  Json reply = post_json(endpoint_, token_, timeout_seconds_, body, name_);
  if (!reply.is_object() || !reply.contains("audio_uri") || !reply["audio_uri"].is_string() ||
      !reply.contains("duration") || !reply["duration"].is_number()) {
    throw ProviderError(name_ + ": response needs 'audio_uri' and 'duration'");
  }
  SynthesizedClip clip{reply["audio_uri"].get<std::string>(), reply["duration"].get<double>()};
  if (!(clip.duration > 0.0)) throw ProviderError(name_ + ": non-positive clip duration");
  return clip;
}

}  // namespace adx3
