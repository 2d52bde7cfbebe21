// HTTP front end for drafts, on-demand queries, and rating capture.
#pragma once

#include <functional>
#include <memory>
#include <string>

#include "adx3/pipeline.h"
#include "adx3/refinead.h"
#include "adx3/rubric.h"

namespace adx3 {

struct ServiceOptions {
  PipelineConfig config;
  /// Defaults to a FileDraftStorage under config.service.storage_dir/drafts.
  std::shared_ptr<DraftStorage> storage;
  /// Persist assets, query contexts and ratings under storage_dir; off keeps them in memory.
  bool persist = true;
  /// Per-request provider construction; defaults build from config.
  std::function<std::unique_ptr<VlmProvider>()> vlm_factory;
  std::function<std::unique_ptr<TtsProvider>()> tts_factory;
  DraftServiceOptions drafts;
};

/// Request author header; "AI" is reserved.
inline constexpr const char* kAuthorHeader = "X-Author-Id";

class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the listening socket; port 0 picks a free port. Returns the bound port.
  /// Throws EnvironmentError when the address cannot be bound.
  int bind(const std::string& host, int port);
  /// Serves until stop(); requires bind().
  void run();
  /// Safe from any thread, including before run() starts serving.
  void stop();
  bool running() const;

  DraftService& drafts();
  RatingStore& ratings();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace adx3
