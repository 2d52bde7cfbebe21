// Providers speaking the JSON-over-HTTP wire contract.
//
//   VLM  POST <endpoint>  {"prompt": str, "images": [uri, ...]}      -> {"text": str}
//   TTS  POST <endpoint>  {"text": str, "voice": "female" | "male"}  -> {"audio_uri": str,
//                                                                       "duration": seconds}
//
// A bearer token is sent when one is configured. Non-2xx responses, connection failures and
// malformed bodies raise ProviderError.
#pragma once

#include <memory>
#include <string>

#include "adx3/providers.h"

namespace adx3 {

struct HttpEndpoint {
  std::string scheme_host_port;  // "http://127.0.0.1:8080"
  std::string path;              // "/v1/generate"
};

/// Splits "http(s)://host[:port][/path]". Throws InvalidArgument on anything else.
HttpEndpoint parse_endpoint(const std::string& url);

class HttpVlmProvider : public VlmProvider {
 public:
  HttpVlmProvider(std::string name, const std::string& endpoint, std::string bearer_token,
                  int timeout_seconds = 60);
  std::string generate(const std::string& prompt, std::span<const ImageRef> images) override;
  std::string identity() const override { return name_; }

 private:
  std::string name_;
  HttpEndpoint endpoint_;
  std::string token_;
  int timeout_seconds_;
};

class HttpTtsProvider : public TtsProvider {
 public:
  HttpTtsProvider(std::string name, const std::string& endpoint, std::string bearer_token,
                  int timeout_seconds = 60);
  SynthesizedClip synthesize(const std::string& text, Voice voice) override;
  std::string identity() const override { return name_; }

 private:
  std::string name_;
  HttpEndpoint endpoint_;
  std::string token_;
  int timeout_seconds_;
};

}  // namespace adx3
