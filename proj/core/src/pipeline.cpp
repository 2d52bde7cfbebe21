#include "adx3/pipeline.h"

#include <map>
#include <memory>
#include <set>

#include "json_util.h"

namespace adx3 {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string read_input(const std::string& stage, const std::filesystem::path& path) {
  if (path.empty() || !std::filesystem::is_regular_file(path)) {
    throw StageError(stage, "missing input", 2);
  }
  return detail::read_file(path);
}

// Runs `fn`, converting engine errors into a StageError naming `stage`.
template <class Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const ParseError& e) {
    throw StageError(name, e.what(), 2);
  } catch (const InvalidArgument& e) {
    throw StageError(name, e.what(), 2);
  } catch (const EnvironmentError& e) {
    throw StageError(name, e.what(), 3);
  } catch (const Error& e) {
    throw StageError(name, e.what(), 1);
  }
}

ProviderConfig provider_at(const Json& j, std::string_view key, const std::filesystem::path& base) {
  ProviderConfig c;
  if (auto it = j.find(std::string(key)); it != j.end()) c = provider_config_from_json(*it);
  if (!c.fixture.empty()) c.fixture = resolve(base, c.fixture).string();
  return c;
}

}  // namespace

PipelineConfig parse_pipeline_config(const Json& j, const std::filesystem::path& base) {
  constexpr std::string_view what = "pipeline config";
  if (!j.is_object()) throw ParseError("pipeline config: expected an object", 0);
  PipelineConfig c;
  c.base_dir = base;
  auto str = [&](const Json& obj, std::string_view key) {
    return detail::get_optional_string(obj, key, what).value_or("");
  };
  c.inputs.asset = resolve(base, str(j, "asset"));
  if (auto it = j.find("inputs"); it != j.end()) {
    c.inputs.embeddings = resolve(base, str(*it, "embeddings"));
    c.inputs.primary_transcript = resolve(base, str(*it, "primary_transcript"));
    c.inputs.secondary_transcript = resolve(base, str(*it, "secondary_transcript"));
  }
  if (auto it = j.find("providers"); it != j.end()) {
    c.vlm = provider_at(*it, "vlm", base);
    c.tts = provider_at(*it, "tts", base);
    if (auto asr = it->find("asr"); asr != it->end()) {
      c.asr_primary = detail::get_optional_string(*asr, "primary", what).value_or(c.asr_primary);
      c.asr_secondary = detail::get_optional_string(*asr, "secondary", what).value_or(c.asr_secondary);
    }
  }
  if (auto it = j.find("segmentation"); it != j.end()) {
    c.segmentation.threshold = detail::get_optional_number(*it, "threshold", what).value_or(c.segmentation.threshold);
    c.segmentation.min_scene_len =
        detail::get_optional_number(*it, "min_scene_len", what).value_or(c.segmentation.min_scene_len);
    c.segmentation.frame_rate = detail::get_optional_number(*it, "frame_rate", what).value_or(c.segmentation.frame_rate);
  }
  if (auto it = j.find("ensemble"); it != j.end()) {
    c.ensemble.time_tol = detail::get_optional_number(*it, "time_tol", what).value_or(c.ensemble.time_tol);
    c.ensemble.high_conf = detail::get_optional_number(*it, "high_conf", what).value_or(c.ensemble.high_conf);
    c.ensemble.min_gap = detail::get_optional_number(*it, "min_gap", what).value_or(c.ensemble.min_gap);
  }
  if (auto it = j.find("optimizer"); it != j.end()) {
    c.words_per_minute = detail::get_optional_number(*it, "words_per_minute", what).value_or(c.words_per_minute);
    c.max_retries = static_cast<int>(detail::get_optional_number(*it, "max_retries", what).value_or(c.max_retries));
    c.min_utterance = detail::get_optional_number(*it, "min_utterance", what).value_or(c.min_utterance);
    c.lookback = detail::get_optional_number(*it, "lookback", what).value_or(c.lookback);
  }
  if (auto it = j.find("retry"); it != j.end()) {
    c.retry_attempts = static_cast<int>(detail::get_optional_number(*it, "attempts", what).value_or(c.retry_attempts));
    c.retry_base_delay_ms =
        static_cast<int>(detail::get_optional_number(*it, "base_delay_ms", what).value_or(c.retry_base_delay_ms));
  }
  if (auto it = j.find("mix"); it != j.end()) {
    c.duck_db = detail::get_optional_number(*it, "duck_db", what).value_or(c.duck_db);
  }
  if (auto t = str(j, "templates_dir"); !t.empty()) c.templates_dir = resolve(base, t);
  if (auto o = str(j, "output_dir"); !o.empty()) c.output_dir = resolve(base, o);
  else c.output_dir = resolve(base, "out");
  if (auto it = j.find("service"); it != j.end()) {
    c.service.host = detail::get_optional_string(*it, "host", what).value_or(c.service.host);
    c.service.port = static_cast<int>(detail::get_optional_number(*it, "port", what).value_or(c.service.port));
    if (auto s = str(*it, "storage_dir"); !s.empty()) c.service.storage_dir = resolve(base, s);
  }
  if (!(c.words_per_minute > 0)) throw InvalidArgument("optimizer.words_per_minute must be > 0");
  if (c.max_retries < 0) throw InvalidArgument("optimizer.max_retries must be >= 0");
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return stage("config", [&] {
    if (!std::filesystem::is_regular_file(path)) {
      throw StageError("config", "missing input " + path.string(), 2);
    }
    const auto base = std::filesystem::absolute(path).parent_path();
    return parse_pipeline_config(detail::parse_json(detail::read_file(path), "pipeline config"), base);
  });
}

void apply_overrides(PipelineConfig& config, const PipelineOverrides& o) {
  if (o.words_per_minute) {
    if (!(*o.words_per_minute > 0)) throw InvalidArgument("--wpm must be > 0");
    config.words_per_minute = *o.words_per_minute;
  }
  if (o.max_retries) {
    if (*o.max_retries < 0) throw InvalidArgument("--max-retries must be >= 0");
    config.max_retries = *o.max_retries;
  }
  if (o.min_utterance) config.min_utterance = *o.min_utterance;
}

std::vector<std::string> pipeline_stages() {
  return {"segmentation", "ensemble", "genad", "optimizer", "synthesis", "mix"};
}

std::string describe_plan(const PipelineConfig& c) {
  std::string out;
  out += "asset:        " + c.inputs.asset.string() + "\n";
  out += "segmentation: " + c.inputs.embeddings.string() + " (threshold " +
         detail::fixed(c.segmentation.threshold, 2) + ", min_scene_len " +
         detail::fixed(c.segmentation.min_scene_len, 2) + " s, " +
         detail::fixed(c.segmentation.frame_rate, 2) + " fps)\n";
  out += "ensemble:     " + c.inputs.primary_transcript.string() + " (" + c.asr_primary + ") + " +
         c.inputs.secondary_transcript.string() + " (" + c.asr_secondary + ")\n";
  out += "genad:        vlm " + c.vlm.kind + (c.vlm.name.empty() ? "" : " '" + c.vlm.name + "'") + "\n";
  out += "optimizer:    " + detail::fixed(c.words_per_minute, 0) + " wpm, max_retries " +
         std::to_string(c.max_retries) + ", min_utterance " + detail::fixed(c.min_utterance, 2) +
         " s, lookback " + detail::fixed(c.lookback, 2) + " s\n";
  out += "synthesis:    tts " + c.tts.kind + (c.tts.name.empty() ? "" : " '" + c.tts.name + "'") + "\n";
  out += "mix:          duck " + detail::fixed(c.duck_db, 1) + " dB\n";
  out += "outputs:\n";
  for (auto f : {kTrackFile, kDecisionFile, kMixPlanFile, kScenesFile, kTranscriptFile, kContextFile}) {
    out += "  " + (c.output_dir / f).string() + "\n";
  }
  return out;
}

MediaAsset load_asset(const PipelineConfig& config) {
  return stage("asset", [&] {
    MediaAsset a = import_asset(read_input("asset", config.inputs.asset));
    a.check();
    return a;
  });
}

AdaptContext PipelineResult::adapt_context() const {
  AdaptContext ctx;
  ctx.asset = asset;
  ctx.scenes = scenes;
  ctx.frames = frames;
  for (auto& f : ctx.frames) f.vector.clear();
  ctx.transcript = transcript;
  ctx.track = track;
  return ctx;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  const MediaAsset asset = load_asset(config);
  auto vlm = stage("genad", [&] { return make_vlm_provider(config.vlm, config.words_per_minute); });
  auto tts = stage("synthesis", [&] { return make_tts_provider(config.tts, config.words_per_minute); });
  return run_pipeline(config, asset, *vlm, *tts);
}

PipelineResult run_pipeline(const PipelineConfig& config, const MediaAsset& asset,
                            VlmProvider& vlm, TtsProvider& tts) {
  PipelineResult r;
  r.asset = asset;

  std::optional<TemplateStore> loaded;
  if (config.templates_dir) {
    loaded = stage("config", [&] { return TemplateStore::load(*config.templates_dir); });
  }
  const TemplateStore* templates = loaded ? &*loaded : &TemplateStore::builtin();
  RetryPolicy retry;
  retry.attempts = config.retry_attempts;
  retry.base_delay = std::chrono::milliseconds(config.retry_base_delay_ms);
  const DurationModel duration{config.words_per_minute, 0.0};

  stage("segmentation", [&] {
    const auto all = parse_embeddings(read_input("segmentation", config.inputs.embeddings));
    r.frames = resample_frames(all, config.segmentation.frame_rate);
    r.scenes = segment(r.frames, asset, config.segmentation);
  });

  stage("ensemble", [&] {
    const auto primary =
        parse_words(read_input("ensemble", config.inputs.primary_transcript), AsrEngine::Primary);
    const auto secondary =
        parse_words(read_input("ensemble", config.inputs.secondary_transcript), AsrEngine::Secondary);
    r.transcript = align_and_filter(primary, secondary, config.ensemble.time_tol, config.ensemble.high_conf);
    r.gaps = compute_gaps(r.transcript, asset, config.ensemble.min_gap);
  });

  stage("genad", [&] {
    GenadOptions options{templates, retry, duration};
    r.genad = run_genad(asset, r.scenes, r.transcript, r.frames, vlm, options);
  });

  OptimizerParams params;
  params.max_retries = config.max_retries;
  params.min_utterance = config.min_utterance;
  params.lookback = config.lookback;
  params.duration = duration;
  params.retry = retry;
  params.templates = templates;

  stage("optimizer", [&] {
    r.schedule = schedule(r.genad.track, r.gaps, asset, r.scenes, r.transcript, vlm, params);
  });

  std::map<std::string, DecisionRecord> decisions;
  for (const auto& d : r.schedule.log) decisions[d.event_id] = d;

  stage("synthesis", [&] {
    r.synthesis = synthesize_track(r.schedule.track, tts, std::span<const Gap>(r.gaps));
    std::vector<std::string> demote;
    for (const auto& f : r.synthesis.flags) {
      if (f.kind == SynthFlagKind::Refit) {
        demote.push_back(f.event_id);
      } else if (auto it = decisions.find(f.event_id); it != decisions.end()) {
        it->second.reason += "; synthesis failed: " + f.detail;
      } else {
        decisions[f.event_id] = {f.event_id, "synth_failed", 0, f.detail};
      }
    }
    r.track = r.synthesis.track;
    if (!demote.empty()) {
      ScheduleResult re = repass_after_synthesis(r.synthesis.track, demote, asset, r.scenes,
                                                  r.transcript, vlm, params);
      r.track = std::move(re.track);
      for (const auto& d : re.log) {
        auto& slot = decisions[d.event_id];
        slot = d;
      }
    }
    canonicalize(r.track);
  });

  stage("mix", [&] {
    auto violations = validate_track(r.track, asset);
    if (!violations.empty()) throw ValidationFailed(std::move(violations));
    r.mix_plan = build_mix_plan(r.track, config.duck_db);
  });

  for (auto& [id, d] : decisions) r.decisions.push_back(std::move(d));
  return r;
}

std::vector<std::filesystem::path> write_outputs(const PipelineResult& r,
                                                 const std::filesystem::path& dir) {
  try {
    std::filesystem::create_directories(dir);
  } catch (const std::filesystem::filesystem_error& e) {
    throw StageError("output", e.what(), 3);
  }
  std::vector<std::filesystem::path> written;
  auto put = [&](std::string_view name, const std::string& contents) {
    const auto path = dir / name;
    detail::write_file(path, contents);
    written.push_back(path);
  };
  put(kTrackFile, export_track(r.track));
  put(kDecisionFile, export_decision_log(r.decisions));
  put(kMixPlanFile, export_mix_plan(r.mix_plan));
  put(kScenesFile, detail::dump(scenes_to_json(r.scenes)));
  put(kTranscriptFile, detail::dump(to_json(r.transcript)));
  put(kContextFile, detail::dump(to_json(r.adapt_context())));
  return written;
}

}  // namespace adx3
