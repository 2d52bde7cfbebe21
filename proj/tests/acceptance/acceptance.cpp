// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fails.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "adx3/adaptad.h"
#include "adx3/mock_providers.h"
#include "adx3/optimizer.h"
#include "adx3/pipeline.h"
#include "adx3/refinead.h"
#include "adx3/rubric.h"
#include "adx3/segmentation.h"
#include "adx3/templates.h"
#include "test_support.h"

#if ADX3_HAVE_CLI
#include "cli.h"
#endif

using namespace adx3;
using Clock = std::chrono::steady_clock;

namespace {

// Collects the first failure of a criterion; later checks still run.
struct Check {
  std::string failure;
  void require(bool ok, const std::string& what) {
    if (!ok && failure.empty()) failure = what;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int decimals = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

// ---------------------------------------------------------------------------------------------

std::string levenshtein_criterion(Check& c) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  const std::vector<std::string> alphabet{"a", "b", "c", "d", "\xC3\xA9", "\xE2\x82\xAC", "\xF0\x9F\x98\x80", " "};
  for (int i = 0; i < 1000; ++i) {
    const auto a = test::random_text(rng, alphabet, 64);
    const auto b = test::random_text(rng, alphabet, 64);
    const auto expected = test::levenshtein_oracle(decode_utf8(a), decode_utf8(b));
    c.require(levenshtein(a, b) == expected, "pair " + std::to_string(i) + " disagrees with the oracle");
  }
  for (int i = 0; i < 10000; ++i) {
    const auto x = test::random_text(rng, alphabet, 24);
    const auto y = test::random_text(rng, alphabet, 24);
    const auto z = test::random_text(rng, alphabet, 24);
    const auto xy = levenshtein(x, y), yx = levenshtein(y, x);
    c.require(xy == yx, "symmetry");
    c.require(levenshtein(x, x) == 0, "identity");
    c.require((xy == 0) == (x == y), "identity of indiscernibles");
    c.require(levenshtein(x, z) <= xy + levenshtein(y, z), "triangle inequality");
  }
  const double s = seconds_since(t0);
  c.require(s < 10.0, "runtime " + fmt(s) + " s");
  return "1000 oracle pairs, 10000 metric triples in " + fmt(s) + " s";
}

// ---------------------------------------------------------------------------------------------

DraftServiceOptions fixed_clock() {
  DraftServiceOptions o;
  o.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
  return o;
}

RevisionOp edit_op(std::string id, std::string after) {
  return {std::move(id), OpKind::EditText, Json(), std::move(after)};
}

std::string attribution_criterion(Check& c) {
  const auto asset = test::make_asset("asset-1", 120.0);
  DraftService svc(std::make_shared<MemoryDraftStorage>(), fixed_clock());

  const auto ai = svc.create_draft(asset, test::make_track("asset-1", {test::make_event("e1", 1.0, 1.0)}));
  const auto ai_shares = svc.attribution(ai.draft_id).shares;
  c.require(ai_shares.size() == 1 && ai_shares.count("AI") && ai_shares.at("AI") == 1.0, "AI-only draft");

  const std::string before(100, 'a');
  std::string after = before;
  for (int i = 0; i < 20; ++i) after[static_cast<std::size_t>(i * 5)] = 'b';
  const auto d = svc.create_draft(
      asset, test::make_track("asset-1", {test::make_event("e1", 1.0, 1.0, EventType::Visual, Delivery::Inline, before)}));
  svc.apply_revision(d.draft_id, 1, "alice", {edit_op("e1", after)});
  const auto ex = svc.attribution(d.draft_id).shares;
  c.require(std::abs(ex.at("AI") - 0.8333) < 1e-4 && std::abs(ex.at("alice") - 0.1667) < 1e-4 &&
                std::abs(ex.at("AI") - 5.0 / 6.0) < 1e-6 && std::abs(ex.at("alice") - 1.0 / 6.0) < 1e-6,
            "worked example gave " + fmt(ex.at("AI"), 6) + "/" + fmt(ex.at("alice"), 6));

  std::mt19937_64 rng(99);
  const std::vector<std::string> alphabet{"a", "b", "c", " ", "\xC3\xA9"};
  const std::vector<std::string> authors{"alice", "bob", "carol", "dan"};
  for (int round = 0; round < 500; ++round) {
    const auto draft = svc.create_draft(
        asset, test::make_track("asset-1", {test::make_event("e1", 1.0, 1.0, EventType::Visual, Delivery::Inline,
                                                               "A" + test::random_text(rng, alphabet, 40)),
                                            test::make_event("e2", 60.0, 1.0)}));
    int version = 1;
    const int edits = static_cast<int>(rng() % 8);
    for (int k = 0; k < edits; ++k) {
      const std::string who = authors[rng() % authors.size()];
      const std::string id = (rng() % 2) ? "e1" : "e2";
      try {
        version = svc.apply_revision(draft.draft_id, version, who,
                                     {edit_op(id, "B" + test::random_text(rng, alphabet, 40))});
      } catch (const Error&) {
      }
    }
    double total = 0.0;
    for (const auto& [who, share] : svc.attribution(draft.draft_id).shares) {
      c.require(share >= 0.0, "negative share");
      total += share;
    }
    c.require(std::abs(total - 1.0) < 1e-9, "shares sum to " + fmt(total, 12) + " in round " + std::to_string(round));
  }
  return "AI-only {AI: 1.0}; worked example " + fmt(ex.at("AI"), 4) + "/" + fmt(ex.at("alice"), 4) +
         "; 500 random logs sum to 1";
}

// ---------------------------------------------------------------------------------------------

std::string segmentation_criterion(Check& c) {
  std::mt19937_64 rng(5150);
  std::normal_distribution<double> noise(0.0, 0.01);
  constexpr double kThreshold = 0.85;
  std::size_t planted_total = 0, suppressed_total = 0;
  for (int round = 0; round < 200; ++round) {
    const int n = 20 + static_cast<int>(rng() % 200);
    const double step = 0.25 + 0.25 * static_cast<double>(rng() % 4);
    const double min_len = static_cast<double>(rng() % 5);
    constexpr std::size_t kDim = 12;
    std::size_t axis = rng() % kDim;
    std::vector<FrameEmbedding> frames;
    std::vector<double> planted;
    for (int i = 0; i < n; ++i) {
      if (i > 0 && rng() % 9 == 0) {
        axis = (axis + 1 + rng() % (kDim - 1)) % kDim;
        planted.push_back(0.5 * ((i - 1) * step + i * step));
      }
      std::vector<double> v(kDim);
      for (auto& x : v) x = noise(rng);
      v[axis] += 1.0;
      frames.push_back(test::frame(i, i * step, std::move(v)));
    }
    // Direct scan: keep a planted drop when it lies at least min_len after the last kept one.
    std::vector<double> expected;
    double last = 0.0;
    for (double b : planted) {
      if (b - last >= min_len) {
        expected.push_back(b);
        last = b;
      }
    }
    planted_total += planted.size();
    suppressed_total += planted.size() - expected.size();
    const auto got = detect_boundaries(frames, kThreshold, min_len);
    bool same = got.size() == expected.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) same = std::abs(got[i] - expected[i]) < 1e-12;
    c.require(same, "round " + std::to_string(round) + ": " + std::to_string(got.size()) + " boundaries, expected " +
                        std::to_string(expected.size()));
  }

  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t dim = 2 + rng() % 62;
    std::vector<double> a(dim), b(dim);
    for (auto& x : a) x = n01(rng);
    for (auto& x : b) x = n01(rng);
    const double base = cosine_similarity(a, b);
    const double ka = scale(rng), kb = scale(rng);
    for (auto& x : a) x *= ka;
    for (auto& x : b) x *= kb;
    worst = std::max(worst, std::abs(cosine_similarity(a, b) - base));
  }
  c.require(worst <= 1e-9, "cosine scale drift " + std::to_string(worst));
  return "200 sequences (" + std::to_string(planted_total) + " planted, " + std::to_string(suppressed_total) +
         " suppressed) match the scan; max cosine scale drift " + std::to_string(worst);
}

// ---------------------------------------------------------------------------------------------

// Window key: the smallest "QZ<n>Q" marker in a shortening prompt. Windows have disjoint events,
// so this is unique per window.
std::optional<int> window_key(std::string_view prompt) {
  std::optional<int> best;
  for (std::size_t p = prompt.find("QZ"); p != std::string_view::npos; p = prompt.find("QZ", p + 2)) {
    std::size_t q = p + 2;
    int v = 0;
    bool digits = false;
    while (q < prompt.size() && prompt[q] >= '0' && prompt[q] <= '9') {
      v = v * 10 + (prompt[q] - '0');
      ++q;
      digits = true;
    }
    if (digits && q < prompt.size() && prompt[q] == 'Q' && (!best || v < *best)) best = v;
  }
  return best;
}

std::string scheduler_criterion(Check& c) {
  std::mt19937_64 rng(777);
  std::size_t inline_total = 0, extended_total = 0, windows_total = 0;
  int max_calls_seen = 0;
  for (int round = 0; round < 500; ++round) {
    const double duration = 30.0 + static_cast<double>(rng() % 60);
    const auto asset = test::make_asset("a", duration, 25.0);

    MergedTranscript tr;
    for (double t = std::uniform_real_distribution<double>(0.0, 3.0)(rng); t < duration;) {
      const double len = 0.15 + 0.35 * std::uniform_real_distribution<double>(0, 1)(rng);
      const double end = std::min(duration, t + len);
      tr.words.push_back(test::word("w", t, end));
      const bool pause = rng() % 6 == 0;
      t = end + (pause ? std::uniform_real_distribution<double>(0.5, 6.0)(rng)
                       : std::uniform_real_distribution<double>(0.0, 0.2)(rng));
    }
    const auto gaps = compute_gaps(tr, asset, 0.5);

    std::vector<Seconds> bounds;
    for (double b = 8.0; b < duration - 2.0; b += 6.0 + static_cast<double>(rng() % 10)) bounds.push_back(b);
    const auto scenes = build_scenes(bounds, asset, {});

    std::vector<ADEvent> events;
    int marker = 0;
    for (const auto& s : scenes) {
      const int k = 1 + static_cast<int>(rng() % 3);
      for (int j = 0; j < k; ++j) {
        const double start = std::uniform_real_distribution<double>(s.start, s.end)(rng);
        const auto type = rng() % 4 == 0 ? EventType::TextOnScreen : EventType::Visual;
        std::string text = "QZ" + std::to_string(marker++) + "Q";
        for (int w = static_cast<int>(rng() % 12); w > 0; --w) text += " word";
        events.push_back(test::make_event("s" + std::to_string(s.scene_index) + "-e" + std::to_string(j), start,
                                          1.0, type, Delivery::Inline, text + "."));
      }
    }
    const auto raw = test::make_track("a", events);

    OptimizerParams params;
    params.max_retries = static_cast<int>(rng() % 4);
    params.retry.attempts = 1;
    params.retry.base_delay = std::chrono::milliseconds(0);

    std::map<int, int> calls;
    const std::uint64_t reply_seed = rng();
    ScriptedVlm vlm([&](const std::string& prompt, std::size_t index) -> std::string {
      if (prompt.find("VISUAL DESCRIPTIONS TO EVALUATE:") != std::string::npos) {
        return R"([{"id": 0, "necessary": true}, {"id": 1, "necessary": true}])";
      }
      const auto key = window_key(prompt);
      if (!key) return "Unattributed.";
      ++calls[*key];
      std::mt19937_64 r(reply_seed ^ (index * 0x9E3779B97F4A7C15ULL));
      std::string reply = "QZ" + std::to_string(*key) + "Q";
      for (int w = static_cast<int>(r() % 14); w > 0; --w) reply += " more";
      return reply + ".";
    });
    const auto result = schedule(raw, gaps, asset, scenes, tr, vlm, params);
    windows_total += result.windows.size();

    for (const auto& e : result.track.events) {
      if (e.delivery == Delivery::Extended) {
        ++extended_total;
        continue;
      }
      ++inline_total;
      const double est = params.duration.estimate(e.text);
      const double end = e.start_time + est;
      for (const auto& w : tr.words) {
        c.require(!(e.start_time < w.end && w.start < end),
                  "round " + std::to_string(round) + ": inline " + e.event_id + " overlaps speech");
      }
      bool fits = false;
      for (const auto& g : gaps) fits = fits || (e.start_time >= g.start - 1e-9 && end <= g.end + 1e-9);
      c.require(fits, "round " + std::to_string(round) + ": inline " + e.event_id + " exceeds its gap");
    }
    for (const auto& [key, n] : calls) {
      max_calls_seen = std::max(max_calls_seen, n - params.max_retries);
      c.require(n <= 1 + params.max_retries, "round " + std::to_string(round) + ": window made " +
                                                 std::to_string(n) + " calls with max_retries " +
                                                 std::to_string(params.max_retries));
    }
    c.require(validate_track(result.track, asset).empty(), "round " + std::to_string(round) + ": invalid track");
  }
  return "500 instances, " + std::to_string(windows_total) + " windows, " + std::to_string(inline_total) +
         " inline and " + std::to_string(extended_total) + " extended events; max (calls - max_retries) per window = " +
         std::to_string(max_calls_seen);
}

// ---------------------------------------------------------------------------------------------

std::optional<PromptId> prompt_by_name(std::string_view name) {
  for (std::size_t i = 0; i < kPromptCount; ++i) {
    const auto id = static_cast<PromptId>(i);
    if (template_name(id) == name) return id;
  }
  return std::nullopt;
}

void flatten(const Json& j, const std::string& prefix, TemplateValues& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "['" + it.key() + "']";
    if (it->is_object()) {
      flatten(*it, key, out);
    } else if (it->is_number()) {
      out[key] = it->get<double>();
    } else {
      out[key] = it->get<std::string>();
    }
  }
}

std::string prompts_criterion(Check& c) {
  const auto cases = Json::parse(test::read_text(test::golden_dir() / "cases.json"));
  const auto& store = TemplateStore::builtin();
  std::set<std::string> templates;
  for (const auto& k : cases) {
    const std::string name = k["name"];
    const auto id = prompt_by_name(k["template"].get<std::string>());
    if (!id) {
      c.require(false, "unknown template in case " + name);
      continue;
    }
    TemplateValues values;
    flatten(k["values"], "", values);
    if (*id == PromptId::GuidelinesPrompt) values["guidelines"] = store.text(PromptId::Guidelines);
    const std::string golden = test::read_text(test::golden_dir() / (name + ".golden"));
    c.require(store.render(*id, values) == golden, "case " + name + " differs from its golden file");
    templates.insert(k["template"].get<std::string>());
  }
  c.require(templates.size() >= 8, "only " + std::to_string(templates.size()) + " templates covered");
  const std::string inline_prompt = build_inline_prompt("A dog runs.", 3.14159);
  c.require(inline_prompt.find("3.14 seconds") != std::string::npos, "inline budget not formatted to 2 decimals");
  const std::string retry = build_retry_prompt("A dog runs.", 4.0, 2.755);
  c.require(retry.find("reduce it by 1.25 seconds") != std::string::npos, "retry reduction not formatted");
  return std::to_string(cases.size()) + " golden cases over " + std::to_string(templates.size()) +
         " templates byte-match";
}

// ---------------------------------------------------------------------------------------------

std::string fixed_values_criterion(Check& c) {
  c.require(voice_for(EventType::Visual) == Voice::Female, "visual voice");
  c.require(voice_for(EventType::TextOnScreen) == Voice::Male, "text-on-screen voice");

  DraftService svc(std::make_shared<MemoryDraftStorage>(), fixed_clock());
  const auto d = svc.create_draft(test::make_asset(), test::make_track("asset-1", {test::make_event("e1", 1, 1)}));
  c.require(d.collab_enabled, "new drafts must allow collaboration");

  // The generated fixture track uses the same mapping.
  const auto config = load_pipeline_config(test::fixture_dir() / "config.json");
  const auto run = run_pipeline(config);
  for (const auto& e : run.track.events) c.require(e.voice == voice_for(e.event_type), "fixture voice " + e.event_id);

  // No-spoiler: inspect every prompt sent for pauses across the asset.
  AdaptContext ctx = run.adapt_context();
  ctx.transcript.words.clear();
  ctx.track.events.clear();
  for (int i = 0; i < 30; ++i) {
    ctx.transcript.words.push_back(test::word("W" + std::to_string(i) + "X", i + 0.2, i + 0.6));
    ctx.track.events.push_back(test::make_event("d" + std::to_string(i), i + 0.1, 0.5, EventType::Visual,
                                                Delivery::Inline, "D" + std::to_string(i) + "X."));
  }
  AdaptOptions opts;
  opts.retry.attempts = 1;
  opts.retry.base_delay = std::chrono::milliseconds(0);
  int prompts = 0;
  for (double pause : {2.0, 7.5, 13.3, 21.0, 28.9}) {
    ScriptedVlm vlm([](const std::string&, std::size_t) -> std::string { return "A garden path."; });
    describe_now(ctx, pause, vlm, nullptr, opts);
    answer_question(ctx, pause, "What is there?", vlm, nullptr, opts);
    for (const auto& call : vlm.calls()) {
      ++prompts;
      for (int i = 0; i < 30; ++i) {
        if (i + 0.2 >= pause) {
          c.require(call.prompt.find("W" + std::to_string(i) + "X") == std::string::npos,
                    "speech after pause " + fmt(pause, 1) + " leaked");
        }
        if (i + 0.1 >= pause) {
          c.require(call.prompt.find("D" + std::to_string(i) + "X") == std::string::npos,
                    "description after pause " + fmt(pause, 1) + " leaked");
        }
      }
    }
  }
  return "visual=female, text_on_screen=male, collab_enabled=true, " + std::to_string(prompts) +
         " on-demand prompts free of post-pause material";
}

// ---------------------------------------------------------------------------------------------

std::string determinism_criterion(Check& c, Clock::time_point suite_start) {
  const auto config_path = (test::fixture_dir() / "config.json").string();
  std::set<std::string> digests;
  for (int run = 0; run < 5; ++run) {
    const auto out = test::fresh_dir("acceptance-genad");
#if ADX3_HAVE_CLI
    const std::vector<std::string> args{"adx3", "genad", "--config", config_path, "--out", out.string()};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream so, se;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), so, se);
    c.require(code == 0, "genad exited " + std::to_string(code) + ": " + se.str());
#else
    write_outputs(run_pipeline(load_pipeline_config(config_path)), out);
#endif
    std::string combined;
    for (auto name : {kTrackFile, kDecisionFile, kMixPlanFile}) {
      const auto path = out / name;
      c.require(std::filesystem::exists(path), std::string(name) + " missing");
      if (std::filesystem::exists(path)) combined += test::digest(test::read_text(path)) + ":";
    }
    digests.insert(combined);
  }
  c.require(digests.size() == 1, std::to_string(digests.size()) + " distinct outputs over 5 runs");
  const double elapsed = seconds_since(suite_start);
  c.require(elapsed < 60.0, "suite took " + fmt(elapsed) + " s");
  return "5 genad runs hash-identical (" + (digests.empty() ? std::string("none") : *digests.begin()) +
         "); suite so far " + fmt(elapsed, 2) + " s";
}

// ---------------------------------------------------------------------------------------------

std::string aggregation_criterion(Check& c) {
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<int> score(1, 5);
  double worst = 0.0;
  for (int round = 0; round < 200; ++round) {
    std::vector<double> v(2 + rng() % 400);
    for (auto& x : v) x = score(rng);
    if (round % 3 == 0) {
      for (auto& x : v) x += 1e6;
    }
    double sum = 0;
    for (double x : v) sum += x;
    const double mean = sum / static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    const auto s = summarize(v);
    worst = std::max({worst, std::abs(s.mean - mean), s.sd ? std::abs(*s.sd - sd) : 1.0});
  }
  c.require(worst <= 1e-9, "summary drift " + std::to_string(worst));

  const std::vector<std::string> models{"gpt", "gemini", "human"};
  std::vector<std::string> raters;
  for (int i = 0; i < 7; ++i) raters.push_back("r" + std::to_string(i + 1));
  std::vector<Video> videos;
  for (int i = 0; i < 20; ++i) {
    videos.push_back({"v" + std::to_string(i), static_cast<Category>(i % 3)});
  }
  for (std::uint64_t seed : {1ULL, 42ULL, 0xDEADBEEFULL}) {
    const auto p1 = make_assignment(raters, videos, models, seed);
    const auto p2 = make_assignment(raters, videos, models, seed);
    c.require(p1 == p2, "plan not reproducible for seed " + std::to_string(seed));
    c.require(plan_from_json(to_json(p1)) == p1, "plan JSON round-trip");
    for (const auto& r : p1.raters) {
      for (const auto& [vid, a] : r.videos) {
        std::set<std::string> labels, assigned;
        for (const auto& [label, model] : a.labels) {
          labels.insert(label);
          assigned.insert(model);
        }
        c.require(a.labels.size() == 3 && labels == std::set<std::string>{"A", "B", "C"} &&
                      assigned == std::set<std::string>(models.begin(), models.end()),
                  "label map for " + r.rater_id + "/" + vid + " is not a bijection");
      }
    }
  }

  std::vector<Video> edu;
  for (int i = 0; i < 20; ++i) edu.push_back({"v" + std::to_string(i), Category::Education});
  const auto plan = make_assignment(raters, edu, models, 1);
  std::vector<RatingRecord> recs;
  for (int i = 0; i < 20; ++i) {
    const std::string rater = raters[static_cast<std::size_t>(i % 7)];
    const std::string vid = "v" + std::to_string(i);
    RatingRecord r;
    r.rater_id = rater;
    r.video_id = vid;
    r.condition_label = plan.blind(rater, vid, "human");
    r.scores.fill(4);
    if (i < 7) r.scores[static_cast<std::size_t>(i)] = 5;
    recs.push_back(r);
  }
  const auto report = aggregate(recs, plan);
  const auto text = format_report(report);
  c.require(text.find("| 4.05") != std::string::npos, "engineered overall mean not printed as 4.05");
  return "two-pass drift " + std::to_string(worst) + "; plans reproducible and bijective; engineered mean " +
         fmt(report.models.empty() ? 0.0 : report.models[0].overall.mean, 4) + " prints 4.05";
}

// ---------------------------------------------------------------------------------------------

std::string event_sourcing_criterion(Check& c) {
  const auto asset = test::make_asset("asset-1", 120.0, 25.0);
  DraftService svc(std::make_shared<MemoryDraftStorage>(), fixed_clock());
  std::mt19937_64 rng(4242);
  const std::vector<std::string> alphabet{"a", "b", " ", "\xC3\xA9", "z"};
  const std::vector<std::string> authors{"alice", "bob", "AI"};
  std::size_t applied = 0, rejected = 0;
  for (int round = 0; round < 200; ++round) {
    std::vector<ADEvent> initial;
    for (int i = 0; i < 4; ++i) {
      initial.push_back(test::make_event("e" + std::to_string(i), 10.0 + 25.0 * i, 1.0,
                                         i % 2 ? EventType::TextOnScreen : EventType::Visual, Delivery::Inline,
                                         "Start " + std::to_string(i) + "."));
    }
    const auto d = svc.create_draft(asset, test::make_track("asset-1", initial));
    int version = 1;
    int next_id = 100;
    const int steps = 1 + static_cast<int>(rng() % 25);
    for (int s = 0; s < steps; ++s) {
      const auto cur = svc.get(d.draft_id).current;
      std::vector<RevisionOp> ops;
      const int nops = 1 + static_cast<int>(rng() % 3);
      for (int k = 0; k < nops; ++k) {
        const auto kind = static_cast<OpKind>(rng() % 6);
        const std::string target =
            cur.events.empty() ? "missing" : cur.events[rng() % cur.events.size()].event_id;
        RevisionOp op{target, kind, Json(), Json()};
        switch (kind) {
          case OpKind::EditText: op.after = "T" + test::random_text(rng, alphabet, 30); break;
          case OpKind::Retime: op.after = std::round(std::uniform_real_distribution<double>(0, 118)(rng) * 25) / 25; break;
          case OpKind::ChangeDelivery: op.after = rng() % 2 ? "inline" : "extended"; break;
          case OpKind::Add: {
            auto e = test::make_event("n" + std::to_string(next_id++),
                                      std::round(std::uniform_real_distribution<double>(0, 118)(rng) * 25) / 25, 1.0);
            op.event_id = e.event_id;
            op.after = to_json(e);
            break;
          }
          case OpKind::Remove: break;
          case OpKind::ReplaceAudio:
            op.after = Json{{"audio_uri", "tts://" + std::to_string(rng() % 1000)}, {"duration", 0.8}};
            break;
        }
        ops.push_back(op);
      }
      try {
        version = svc.apply_revision(d.draft_id, version, authors[rng() % authors.size()], ops);
        ++applied;
      } catch (const RejectedWithViolations&) {
        ++rejected;
      }
    }
    const auto now = svc.get(d.draft_id);
    const auto replayed = replay(now.current.track_id, now.current.asset_id, now.log, DurationModel{now.words_per_minute});
    c.require(export_track(replayed) == export_track(now.current),
              "round " + std::to_string(round) + ": replay differs");
    c.require(static_cast<int>(now.log.size()) == now.version, "log length differs from version");
  }

  // Concurrent conflicting revisions at the same version.
  int trials_ok = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = svc.create_draft(asset, test::make_track("asset-1", {test::make_event("e1", 1.0, 1.0)}));
    std::atomic<int> ok{0}, conflict{0}, other{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 4; ++i) {
      threads.emplace_back([&, i] {
        try {
          svc.apply_revision(d.draft_id, 1, "user" + std::to_string(i), {edit_op("e1", "Take " + std::to_string(i))});
          ++ok;
        } catch (const Conflict& e) {
          if (e.current_version() == 2) ++conflict;
        } catch (...) {
          ++other;
        }
      });
    }
    for (auto& t : threads) t.join();
    if (ok == 1 && conflict == 3 && other == 0) ++trials_ok;
  }
  c.require(trials_ok == 20, std::to_string(20 - trials_ok) + " concurrent trials did not resolve one-winner");
  return "200 random sequences (" + std::to_string(applied) + " applied, " + std::to_string(rejected) +
         " rejected revisions) replay byte-exactly; 20/20 concurrent trials: 1 success, rest conflict (409)";
}

}  // namespace

int main() {
  const auto suite_start = Clock::now();
  struct Criterion {
    const char* name;
    std::function<std::string(Check&)> run;
  };
  const std::vector<Criterion> criteria{
      {"levenshtein-correctness", levenshtein_criterion},
      {"attribution", attribution_criterion},
      {"segmentation", segmentation_criterion},
      {"scheduler-safety", scheduler_criterion},
      {"prompt-fidelity", prompts_criterion},
      {"fixed-values", fixed_values_criterion},
      {"end-to-end-determinism", [&](Check& c) { return determinism_criterion(c, suite_start); }},
      {"aggregation", aggregation_criterion},
      {"event-sourcing", event_sourcing_criterion},
  };
  int failed = 0;
  for (const auto& k : criteria) {
    Check c;
    std::string detail;
    try {
      detail = k.run(c);
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    const bool pass = c.failure.empty();
    failed += pass ? 0 : 1;
    std::cout << (pass ? "PASS " : "FAIL ") << k.name << ": " << (pass ? detail : c.failure) << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed in "
            << fmt(seconds_since(suite_start), 2) << " s" << std::endl;
  return failed ? 1 : 0;
}
