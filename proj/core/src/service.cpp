#include "adx3/service.h"

#include <httplib.h>

#include <atomic>
#include <fstream>
#include <map>
#include <shared_mutex>
#include <thread>

#include "json_util.h"

namespace adx3 {

namespace {

Json error_body(const std::string& message) { return Json{{"error", message}}; }

Json violations_json(const std::vector<Violation>& vs) {
  Json arr = Json::array();
  for (const auto& v : vs) arr.push_back({{"event_id", v.event_id}, {"rule", v.rule}, {"message", v.message}});
  return arr;
}

void send(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  Json j = detail::parse_json(req.body, "request body");
  if (!j.is_object()) throw ParseError("request body must be a JSON object", 0);
  return j;
}

std::string author_of(const httplib::Request& req) {
  return req.has_header(kAuthorHeader) ? detail::trim(req.get_header_value(kAuthorHeader)) : "";
}

// Maps engine exceptions onto HTTP statuses.
template <class Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const NotFound& e) {
    send(res, 404, error_body(e.what()));
  } catch (const Conflict& e) {
    Json b = error_body(e.what());
    b["current_version"] = e.current_version();
    send(res, 409, b);
  } catch (const Forbidden& e) {
    send(res, 403, error_body(e.what()));
  } catch (const Locked& e) {
    send(res, 423, error_body(e.what()));
  } catch (const RejectedWithViolations& e) {
    Json b = error_body(e.what());
    b["violations"] = violations_json(e.violations());
    send(res, 422, b);
  } catch (const ValidationFailed& e) {
    Json b = error_body(e.what());
    b["violations"] = violations_json(e.violations());
    send(res, 422, b);
  } catch (const RangeError& e) {
    send(res, 422, error_body(e.what()));
  } catch (const NoFrames& e) {
    send(res, 422, error_body(e.what()));
  } catch (const ParseError& e) {
    send(res, 400, error_body(e.what()));
  } catch (const InvalidArgument& e) {
    send(res, 400, error_body(e.what()));
  } catch (const Unavailable& e) {
    send(res, 503, error_body(e.what()));
  } catch (const StageError& e) {
    send(res, e.exit_code() == 2 ? 422 : 503, error_body(e.what()));
  } catch (const EnvironmentError& e) {
    send(res, 503, error_body(e.what()));
  } catch (const nlohmann::json::exception& e) {
    send(res, 400, error_body(e.what()));
  } catch (const std::exception& e) {
    send(res, 500, error_body(e.what()));
  }
}

struct AssetEntry {
  MediaAsset asset;
  PipelineInputs inputs;
};

}  // namespace

struct Service::Impl {
  ServiceOptions options;
  std::unique_ptr<DraftService> drafts;
  RatingStore ratings;
  httplib::Server server;
  std::atomic<bool> bound{false};
  std::mutex run_mu;
  bool stop_requested = false;
  bool in_run = false;

  mutable std::shared_mutex mu;
  std::map<std::string, AssetEntry, std::less<>> assets;
  std::map<std::string, std::shared_ptr<const AdaptContext>, std::less<>> contexts;
  std::mutex ratings_file_mu;

  std::filesystem::path root() const { return options.config.service.storage_dir; }

  void load_persisted() {
    if (!options.persist) return;
    const auto asset_dir = root() / "assets";
    if (std::filesystem::exists(asset_dir)) {
      for (const auto& entry : std::filesystem::directory_iterator(asset_dir)) {
        if (!entry.is_directory()) continue;
        const auto asset_file = entry.path() / "asset.json";
        if (!std::filesystem::exists(asset_file)) continue;
        Json j = detail::parse_json(detail::read_file(asset_file), "stored asset");
        AssetEntry a{asset_from_json(j["asset"]), inputs_from_json(j["inputs"], root())};
        const auto ctx_file = entry.path() / "context.json";
        if (std::filesystem::exists(ctx_file)) {
          contexts[a.asset.asset_id] = std::make_shared<const AdaptContext>(
              adapt_context_from_json(detail::parse_json(detail::read_file(ctx_file), "stored context")));
        }
        assets[a.asset.asset_id] = std::move(a);
      }
    }
    const auto ratings_file = root() / "ratings.jsonl";
    if (std::filesystem::exists(ratings_file)) {
      for (const auto& rec : detail::parse_records(detail::read_file(ratings_file), "stored ratings")) {
        ratings.record(rating_from_json(rec));
      }
    }
  }

  static Json inputs_to_json(const PipelineInputs& in) {
    return {{"embeddings", in.embeddings.string()},
            {"primary_transcript", in.primary_transcript.string()},
            {"secondary_transcript", in.secondary_transcript.string()}};
  }

  static PipelineInputs inputs_from_json(const Json& j, const std::filesystem::path& base) {
    PipelineInputs in;
    if (!j.is_object()) return in;
    auto path = [&](const char* key) -> std::filesystem::path {
      auto s = detail::get_optional_string(j, key, "asset inputs").value_or("");
      if (s.empty()) return {};
      std::filesystem::path p(s);
      return p.is_absolute() ? p : base / p;
    };
    in.embeddings = path("embeddings");
    in.primary_transcript = path("primary_transcript");
    in.secondary_transcript = path("secondary_transcript");
    return in;
  }

  std::unique_ptr<VlmProvider> vlm() const {
    if (options.vlm_factory) return options.vlm_factory();
    return make_vlm_provider(options.config.vlm, options.config.words_per_minute);
  }

  std::unique_ptr<TtsProvider> tts() const {
    if (options.tts_factory) return options.tts_factory();
    return make_tts_provider(options.config.tts, options.config.words_per_minute);
  }

  std::shared_ptr<const AdaptContext> context(std::string_view asset_id) const {
    std::shared_lock lock(mu);
    auto it = contexts.find(asset_id);
    if (it == contexts.end()) {
      throw NotFound("no generated context for asset '" + std::string(asset_id) + "'");
    }
    return it->second;
  }

  void routes();
};

void Service::Impl::routes() {
  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.status = 200;
    res.set_content("ok", "text/plain");
  });

  server.Post("/assets", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      Json body = parse_body(req);
      Json asset_json = body.contains("asset") ? body["asset"] : body;
      AssetEntry entry{asset_from_json(asset_json), options.config.inputs};
      entry.asset.check();
      if (entry.asset.asset_id.empty()) throw InvalidArgument("asset_id must not be empty");
      if (auto it = body.find("inputs"); it != body.end()) {
        PipelineInputs given = inputs_from_json(*it, options.config.base_dir);
        if (!given.embeddings.empty()) entry.inputs.embeddings = given.embeddings;
        if (!given.primary_transcript.empty()) entry.inputs.primary_transcript = given.primary_transcript;
        if (!given.secondary_transcript.empty()) entry.inputs.secondary_transcript = given.secondary_transcript;
      }
      if (options.persist) {
        detail::write_file(root() / "assets" / entry.asset.asset_id / "asset.json",
                           detail::dump({{"asset", to_json(entry.asset)}, {"inputs", inputs_to_json(entry.inputs)}}));
      }
      const std::string id = entry.asset.asset_id;
      {
        std::unique_lock lock(mu);
        assets[id] = std::move(entry);
      }
      send(res, 201, {{"asset_id", id}});
    });
  });

  server.Post(R"(/assets/([^/]+)/genad)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string asset_id = req.matches[1];
      AssetEntry entry;
      {
        std::shared_lock lock(mu);
        auto it = assets.find(asset_id);
        if (it == assets.end()) throw NotFound("asset '" + asset_id + "' not found");
        entry = it->second;
      }
      PipelineConfig cfg = options.config;
      cfg.inputs = entry.inputs;
      auto v = vlm();
      auto t = tts();
      PipelineResult result = run_pipeline(cfg, entry.asset, *v, *t);
      auto ctx = std::make_shared<const AdaptContext>(result.adapt_context());
      if (options.persist) {
        detail::write_file(root() / "assets" / asset_id / "context.json", detail::dump(to_json(*ctx)));
      }
      {
        std::unique_lock lock(mu);
        contexts[asset_id] = ctx;
      }
      const std::string author = author_of(req);
      std::optional<std::string> owner;
      if (!author.empty() && author != kAiAuthor) owner = author;
      Draft d = drafts->create_draft(entry.asset, result.track, owner);
      Json decisions = Json::array();
      for (const auto& r : result.decisions) decisions.push_back(to_json(r));
      send(res, 201, {{"draft_id", d.draft_id}, {"version", d.version},
                      {"events", d.current.events.size()}, {"decisions", decisions}});
    });
  });

  server.Get(R"(/drafts/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, to_json(drafts->get(req.matches[1].str()))); });
  });

  server.Post(R"(/drafts/([^/]+)/revisions)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      Json body = parse_body(req);
      const int expected = static_cast<int>(detail::get_integer(body, "expected_version", "revision request"));
      std::vector<RevisionOp> ops;
      const Json& raw_ops = detail::require(body, "ops", "revision request");
      if (!raw_ops.is_array()) throw ParseError("ops must be an array", 0);
      for (const auto& op : raw_ops) ops.push_back(op_from_json(op));
      const int version = drafts->apply_revision(req.matches[1].str(), expected, author_of(req), std::move(ops));
      send(res, 200, {{"version", version}});
    });
  });

  server.Post(R"(/drafts/([^/]+)/events/([^/]+)/nudge)",
              [this](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  Json body = parse_body(req);
                  const int expected =
                      static_cast<int>(detail::get_integer(body, "expected_version", "nudge request"));
                  const long long frames = detail::get_integer(body, "frames", "nudge request");
                  auto r = drafts->nudge_event(req.matches[1].str(), expected, req.matches[2].str(),
                                               frames, author_of(req));
                  send(res, 200, {{"start_time", r.start_time}, {"version", r.version}});
                });
              });

  server.Post(R"(/drafts/([^/]+)/collab)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      Json body = parse_body(req);
      const bool enabled = detail::get_bool(body, "enabled", "collab request");
      drafts->set_collab(req.matches[1].str(), enabled, author_of(req));
      send(res, 200, {{"collab_enabled", enabled}});
    });
  });

  server.Post(R"(/drafts/([^/]+)/publish)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      drafts->publish(req.matches[1].str(), author_of(req));
      send(res, 200, {{"published", true}});
    });
  });

  server.Delete(R"(/drafts/([^/]+)/publish)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      drafts->unpublish(req.matches[1].str(), author_of(req));
      send(res, 200, {{"published", false}});
    });
  });

  server.Get(R"(/drafts/([^/]+)/attribution)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const Draft d = drafts->get(req.matches[1].str());
      const std::string who = author_of(req);
      if (!d.published && d.owner_id && !DraftService::is_author(d, who)) {
        throw Forbidden("attribution of an unpublished draft is visible to its authors only");
      }
      Json body = to_json(compute_attribution(d));
      body["published"] = d.published;
      send(res, 200, body);
    });
  });

  server.Get(R"(/drafts/([^/]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string format = req.has_param("format") ? req.get_param_value("format") : "track";
      const Draft d = drafts->get(req.matches[1].str());
      if (format == "vtt") {
        res.status = 200;
        res.set_content(export_webvtt(d.current), "text/vtt");
      } else if (format == "track") {
        res.status = 200;
        res.set_content(export_track(d.current), "application/json");
      } else {
        throw InvalidArgument("unknown format '" + format + "'");
      }
    });
  });

  server.Post(R"(/drafts/([^/]+)/feedback)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      Json body = parse_body(req);
      Feedback f;
      f.author_id = author_of(req);
      f.rating = static_cast<int>(detail::get_integer(body, "rating", "feedback"));
      f.comment = detail::get_optional_string(body, "comment", "feedback").value_or("");
      drafts->add_feedback(req.matches[1].str(), std::move(f));
      send(res, 201, {{"stored", true}});
    });
  });

  auto adapt = [this](const httplib::Request& req, httplib::Response& res, QueryKind kind) {
    guarded(res, [&] {
      Json body = parse_body(req);
      const std::string asset_id = detail::get_string(body, "asset_id", "adapt request");
      const Seconds t = detail::get_number(body, "time", "adapt request");
      auto ctx = context(asset_id);
      auto v = vlm();
      std::unique_ptr<TtsProvider> speech;
      try {
        speech = tts();
      } catch (const Error& e) {
        throw Unavailable(std::string("speech synthesis unavailable: ") + e.what());
      }
      AdaptOptions opts;
      AdaptReply r;
      if (kind == QueryKind::Describe) {
        r = describe_now(*ctx, t, *v, speech.get(), opts);
      } else {
        const std::string q = detail::get_string(body, "question", "adapt request");
        r = answer_question(*ctx, t, q, *v, speech.get(), opts);
      }
      send(res, 200, to_json(r));
    });
  };
  server.Post("/adapt/describe", [adapt](const httplib::Request& req, httplib::Response& res) {
    adapt(req, res, QueryKind::Describe);
  });
  server.Post("/adapt/question", [adapt](const httplib::Request& req, httplib::Response& res) {
    adapt(req, res, QueryKind::Question);
  });

  server.Post("/ratings", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      RatingRecord r = rating_from_json(parse_body(req));
      const std::string id = ratings.record(r);
      if (options.persist) {
        std::lock_guard lock(ratings_file_mu);
        std::filesystem::create_directories(root());
        std::ofstream out(root() / "ratings.jsonl", std::ios::binary | std::ios::app);
        out << to_json(r).dump() << '\n';
      }
      send(res, 201, {{"id", id}});
    });
  });

  server.Get("/ratings", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      Json arr = Json::array();
      for (const auto& r : ratings.snapshot()) arr.push_back(to_json(r));
      send(res, 200, arr);
    });
  });
}

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  auto& opts = impl_->options;
  if (!opts.storage) {
    if (opts.persist) {
      opts.storage = std::make_shared<FileDraftStorage>(opts.config.service.storage_dir / "drafts");
    } else {
      opts.storage = std::make_shared<MemoryDraftStorage>();
    }
  }
  DraftServiceOptions ds = opts.drafts;
  ds.duration.words_per_minute = opts.config.words_per_minute;
  impl_->drafts = std::make_unique<DraftService>(opts.storage, ds);
  // SO_REUSEADDR without SO_REUSEPORT, so a port held by another server fails to bind.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  impl_->load_persisted();
  impl_->routes();
}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  int bound = -1;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (impl_->server.bind_to_port(host, port)) {
    bound = port;
  }
  if (bound <= 0) {
    throw EnvironmentError("cannot listen on " + host + ":" + std::to_string(port));
  }
  impl_->bound = true;
  return bound;
}

void Service::run() {
  if (!impl_->bound) throw Error("Service::run called before bind");
  {
    std::lock_guard lock(impl_->run_mu);
    if (impl_->stop_requested) return;
    impl_->in_run = true;
  }
  impl_->server.listen_after_bind();
  std::lock_guard lock(impl_->run_mu);
  impl_->in_run = false;
}

void Service::stop() {
  if (!impl_) return;
  for (;;) {
    {
      std::lock_guard lock(impl_->run_mu);
      impl_->stop_requested = true;
      // The server ignores stop() until its accept loop is up, so wait out a starting run().
      if (!impl_->in_run || impl_->server.is_running()) break;
    }
    std::this_thread::yield();
  }
  impl_->server.stop();
}

bool Service::running() const { return impl_->server.is_running(); }

DraftService& Service::drafts() { return *impl_->drafts; }
RatingStore& Service::ratings() { return impl_->ratings; }

}  // namespace adx3
