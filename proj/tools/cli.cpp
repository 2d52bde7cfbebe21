#include "cli.h"

#include <CLI11.hpp>
#include <pthread.h>
#include <signal.h>

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "adx3/adaptad.h"
#include "adx3/pipeline.h"
#include "adx3/rubric.h"
#include "adx3/service.h"

namespace adx3::cli {

namespace {

class CommandError : public std::runtime_error {
 public:
  CommandError(const std::string& what, int code) : std::runtime_error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

std::string slurp(const std::string& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CommandError(what + ": cannot read " + path, 2);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty() || out_path == "-") {
    out << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
  if (!f) throw CommandError("cannot write " + out_path, 3);
  f << text;
  if (!f.flush()) throw CommandError("cannot write " + out_path, 3);
}

Json parse_json_file(const std::string& path, const std::string& what) {
  try {
    return Json::parse(slurp(path, what));
  } catch (const nlohmann::json::exception& e) {
    throw CommandError(what + ": " + e.what(), 2);
  }
}

struct GenadArgs {
  std::string config;
  std::string out_dir;
  bool dry_run = false;
  std::optional<double> wpm;
  std::optional<int> max_retries;
  std::optional<double> min_utterance;
};

int cmd_genad(const GenadArgs& a, std::ostream& out, std::ostream&) {
  PipelineConfig config = load_pipeline_config(a.config);
  apply_overrides(config, {a.wpm, a.max_retries, a.min_utterance});
  if (!a.out_dir.empty()) config.output_dir = a.out_dir;
  if (a.dry_run) {
    out << "stages: ";
    const auto stages = pipeline_stages();
    for (std::size_t i = 0; i < stages.size(); ++i) out << (i ? " -> " : "") << stages[i];
    out << "\n" << describe_plan(config) << "dry run: nothing written\n";
    return 0;
  }
  PipelineResult result = run_pipeline(config);
  for (const auto& path : write_outputs(result, config.output_dir)) out << path.string() << "\n";
  return 0;
}

struct ServeArgs {
  std::string config;
  std::string host;
  int port = -1;
  std::string storage;
};

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  PipelineConfig config = load_pipeline_config(a.config);
  if (!a.host.empty()) config.service.host = a.host;
  if (a.port >= 0) config.service.port = a.port;
  if (!a.storage.empty()) config.service.storage_dir = a.storage;
  try {
    std::filesystem::create_directories(config.service.storage_dir);
  } catch (const std::filesystem::filesystem_error& e) {
    throw EnvironmentError(std::string("storage directory not writable: ") + e.what());
  }

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ServiceOptions options;
  options.config = config;
  Service service(std::move(options));
  const int port = service.bind(config.service.host, config.service.port);
  out << "listening on " << config.service.host << ":" << port << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  service.run();
  // run() only returns after stop(); wake the waiter if something else stopped the server.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  err << "shut down\n";
  return 0;
}

int cmd_export(const std::string& track_path, const std::string& format, const std::string& out_path,
               std::ostream& out) {
  if (format != "vtt" && format != "track") throw CommandError("unknown format '" + format + "'", 2);
  const Track track = import_track(slurp(track_path, "export"));
  emit(format == "vtt" ? export_webvtt(track) : export_track(track), out_path, out);
  return 0;
}

struct PlanArgs {
  std::uint64_t seed = 0;
  std::string study;
  std::string out;
};

int cmd_eval_plan(const PlanArgs& a, std::ostream& out) {
  const Json study = parse_json_file(a.study, "study");
  std::vector<std::string> raters, models;
  std::vector<Video> videos;
  try {
    for (const auto& r : study.at("raters")) raters.push_back(r.get<std::string>());
    for (const auto& m : study.at("models")) models.push_back(m.get<std::string>());
    for (const auto& v : study.at("videos")) {
      const std::string cat = v.at("category").get<std::string>();
      auto c = parse_category(cat);
      if (!c) throw CommandError("study: unknown category '" + cat + "'", 2);
      videos.push_back({v.at("video_id").get<std::string>(), *c});
    }
  } catch (const nlohmann::json::exception& e) {
    throw CommandError(std::string("study: ") + e.what(), 2);
  }
  const AssignmentPlan plan = make_assignment(raters, videos, models, a.seed);
  emit(to_json(plan).dump(2) + "\n", a.out, out);
  return 0;
}

int cmd_eval_aggregate(const std::string& ratings_path, const std::string& plan_path, bool as_json,
                       std::ostream& out) {
  const AssignmentPlan plan = plan_from_json(parse_json_file(plan_path, "plan"));
  const auto records = parse_ratings_csv(slurp(ratings_path, "ratings"));
  RatingStore store;
  for (const auto& r : records) store.record(r);
  const auto snapshot = store.snapshot();
  const Report report = aggregate(snapshot, plan);
  out << (as_json ? to_json(report).dump(2) + "\n" : format_report(report));
  return 0;
}

struct AdaptArgs {
  std::string context;
  std::string config;
  double time = 0.0;
  std::string question;
};

int cmd_adapt(const AdaptArgs& a, bool question, std::ostream& out) {
  const AdaptContext ctx = adapt_context_from_json(parse_json_file(a.context, "context"));
  ProviderConfig vlm_cfg, tts_cfg;
  double wpm = 150.0;
  if (!a.config.empty()) {
    const PipelineConfig config = load_pipeline_config(a.config);
    vlm_cfg = config.vlm;
    tts_cfg = config.tts;
    wpm = config.words_per_minute;
  }
  auto vlm = make_vlm_provider(vlm_cfg, wpm);
  auto tts = make_tts_provider(tts_cfg, wpm);
  const AdaptReply r = question ? answer_question(ctx, a.time, a.question, *vlm, tts.get())
                                : describe_now(ctx, a.time, *vlm, tts.get());
  out << r.text << "\n";
  if (r.audio_uri) out << "audio: " << *r.audio_uri << "\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"adx3: audio description generation, editing, and evaluation"};
  app.require_subcommand(1);

  GenadArgs genad;
  auto* genad_cmd = app.add_subcommand("genad", "Generate a described track from declared inputs");
  genad_cmd->add_option("--config", genad.config, "Pipeline config file")->required();
  genad_cmd->add_option("--out", genad.out_dir, "Output directory (overrides the config)");
  genad_cmd->add_flag("--dry-run", genad.dry_run, "Print the stage plan and write nothing");
  genad_cmd->add_option("--wpm", genad.wpm, "Speech rate for duration estimates");
  genad_cmd->add_option("--max-retries", genad.max_retries, "Shortening retries per window");
  genad_cmd->add_option("--min-utterance", genad.min_utterance, "Shortest usable gap in seconds");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--config", serve.config, "Pipeline config file")->required();
  serve_cmd->add_option("--host", serve.host, "Listen address");
  serve_cmd->add_option("--port", serve.port, "Listen port (0 picks a free port)");
  serve_cmd->add_option("--storage", serve.storage, "Storage directory");

  std::string track_path, format, export_out;
  auto* export_cmd = app.add_subcommand("export", "Convert a canonical track file");
  export_cmd->add_option("track", track_path, "Canonical track file")->required();
  export_cmd->add_option("--format", format, "vtt or track")->required();
  export_cmd->add_option("--out", export_out, "Output file (default stdout)");

  auto* eval_cmd = app.add_subcommand("eval", "Rating study tools");
  eval_cmd->require_subcommand(1);
  PlanArgs plan;
  auto* plan_cmd = eval_cmd->add_subcommand("plan", "Make a blinded, randomized assignment plan");
  plan_cmd->add_option("--seed", plan.seed, "Shuffle seed")->required();
  plan_cmd->add_option("--study", plan.study, "Study file {raters, videos, models}")->required();
  plan_cmd->add_option("--out", plan.out, "Plan file (default stdout)");
  std::string ratings_path, plan_path;
  bool as_json = false;
  auto* agg_cmd = eval_cmd->add_subcommand("aggregate", "Summarize ratings by model, criterion, category");
  agg_cmd->add_option("ratings", ratings_path, "Ratings CSV")->required();
  agg_cmd->add_option("--plan", plan_path, "Plan file")->required();
  agg_cmd->add_flag("--json", as_json, "Emit JSON instead of tables");

  auto* adapt_cmd = app.add_subcommand("adapt", "On-demand queries at a paused position");
  adapt_cmd->require_subcommand(1);
  AdaptArgs adapt;
  auto add_adapt_options = [&](CLI::App* c) {
    c->add_option("--context", adapt.context, "context.json from a genad run")->required();
    c->add_option("--time", adapt.time, "Pause time in seconds")->required();
    c->add_option("--config", adapt.config, "Pipeline config for provider selection");
  };
  auto* describe_cmd = adapt_cmd->add_subcommand("describe", "Describe what is visible now");
  add_adapt_options(describe_cmd);
  auto* question_cmd = adapt_cmd->add_subcommand("question", "Answer a question about the paused frame");
  add_adapt_options(question_cmd);
  question_cmd->add_option("--question", adapt.question, "Question text")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*genad_cmd) return cmd_genad(genad, out, err);
    if (*serve_cmd) return cmd_serve(serve, out, err);
    if (*export_cmd) return cmd_export(track_path, format, export_out, out);
    if (*plan_cmd) return cmd_eval_plan(plan, out);
    if (*agg_cmd) return cmd_eval_aggregate(ratings_path, plan_path, as_json, out);
    if (*describe_cmd) return cmd_adapt(adapt, false, out);
    if (*question_cmd) return cmd_adapt(adapt, true, out);
  } catch (const CommandError& e) {
    err << e.what() << "\n";
    return e.code();
  } catch (const StageError& e) {
    err << e.what() << "\n";
    return e.exit_code();
  } catch (const EnvironmentError& e) {
    err << e.what() << "\n";
    return 3;
  } catch (const ValidationFailed& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const InvalidArgument& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const RangeError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const CardinalityError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace adx3::cli
