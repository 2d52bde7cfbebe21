#include <doctest.h>

#include "adx3/mock_providers.h"
#include "adx3/pipeline.h"
#include "test_support.h"

using namespace adx3;
namespace fs = std::filesystem;

namespace {

fs::path fixture_copy(std::string_view name) {
  const auto dir = test::fresh_dir(name);
  fs::copy(test::fixture_dir(), dir, fs::copy_options::recursive);
  return dir;
}

}  // namespace

TEST_CASE("config parsing resolves paths against the config directory") {
  const auto c = load_pipeline_config(test::fixture_dir() / "config.json");
  CHECK(c.inputs.asset == test::fixture_dir() / "asset.json");
  CHECK(c.vlm.fixture == (test::fixture_dir() / "vlm_fixture.json").string());
  CHECK(c.asr_primary == "fixture-asr-a");
  CHECK(c.max_retries == 2);
  CHECK(c.retry_base_delay_ms == 0);
  CHECK(c.service.storage_dir == test::fixture_dir() / "store");
  CHECK_THROWS_AS(load_pipeline_config(test::fixture_dir() / "nope.json"), StageError);
  try {
    parse_pipeline_config(Json::parse(R"({"optimizer": {"max_retries": "two"}})"), ".");
    FAIL("expected an error");
  } catch (const Error&) {
  }
}

TEST_CASE("overrides and plan description") {
  auto c = load_pipeline_config(test::fixture_dir() / "config.json");
  apply_overrides(c, {160.0, 1, std::nullopt});
  CHECK(c.words_per_minute == 160.0);
  CHECK(c.max_retries == 1);
  CHECK(c.min_utterance == 0.5);
  const auto plan = describe_plan(c);
  CHECK(plan.find("160 wpm, max_retries 1") != std::string::npos);
  CHECK(plan.find("decisions.jsonl") != std::string::npos);
  CHECK(pipeline_stages() ==
        std::vector<std::string>{"segmentation", "ensemble", "genad", "optimizer", "synthesis", "mix"});
}

TEST_CASE("end-to-end run on the fixture") {
  const auto c = load_pipeline_config(test::fixture_dir() / "config.json");
  const auto r = run_pipeline(c);
  CHECK(r.scenes.size() == 3);
  CHECK(r.genad.track.events.size() == 6);
  CHECK_FALSE(r.track.events.empty());
  CHECK(validate_track(r.track, r.asset).empty());
  CHECK(check_mix_plan(r.mix_plan).empty());
  // The spurious low-confidence filler word is filtered out.
  for (const auto& w : r.transcript.words) CHECK(w.text != "um");

  bool extended = false;
  for (const auto& e : r.track.events) {
    CHECK(e.audio_uri.has_value());
    if (e.delivery == Delivery::Extended) {
      extended = true;
      continue;
    }
    bool inside = false;
    for (const auto& g : r.gaps) inside = inside || g.contains(e.start_time, e.end_time());
    CHECK(inside);
  }
  CHECK(extended);
  CHECK(r.decisions.size() == r.genad.track.events.size());
}

TEST_CASE("runs are byte-identical") {
  const auto c = load_pipeline_config(test::fixture_dir() / "config.json");
  const auto d1 = test::fresh_dir("det1");
  const auto d2 = test::fresh_dir("det2");
  const auto files1 = write_outputs(run_pipeline(c), d1);
  write_outputs(run_pipeline(c), d2);
  CHECK(files1.size() == 6);
  for (const auto& f : files1) {
    CAPTURE(f);
    CHECK(test::read_text(f) == test::read_text(d2 / f.filename()));
  }
  const auto ctx = adapt_context_from_json(Json::parse(test::read_text(d1 / kContextFile)));
  CHECK(ctx.scenes.size() == 3);
  CHECK(import_track(test::read_text(d1 / kTrackFile)).events.size() > 0);
}

TEST_CASE("a missing input names its stage") {
  const auto dir = fixture_copy("missing");
  fs::remove(dir / "embeddings.jsonl");
  const auto c = load_pipeline_config(dir / "config.json");
  try {
    run_pipeline(c);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "segmentation");
    CHECK(e.exit_code() == 2);
    CHECK(std::string(e.what()) == "segmentation: missing input");
  }
}

TEST_CASE("malformed input is an input error of its stage") {
  const auto dir = fixture_copy("malformed");
  test::write_text(dir / "asr_primary.jsonl", "{\"text\": \"x\", \"start\": 1}\n");
  const auto c = load_pipeline_config(dir / "config.json");
  try {
    run_pipeline(c);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "ensemble");
    CHECK(e.exit_code() == 2);
  }
}

TEST_CASE("synthesis overruns are demoted through the repass") {
  auto c = load_pipeline_config(test::fixture_dir() / "config.json");
  const auto asset = load_asset(c);
  HeuristicVlm vlm(Json::parse(test::read_text(test::fixture_dir() / "vlm_fixture.json")),
                   DurationModel{c.words_per_minute});
  MockTts slow(DurationModel{c.words_per_minute}, 3.0);
  const auto r = run_pipeline(c, asset, vlm, slow);
  CHECK(validate_track(r.track, asset).empty());
  bool demoted = false;
  for (const auto& d : r.decisions) demoted = demoted || d.outcome.rfind("demoted_", 0) == 0;
  CHECK(demoted);
  CHECK(check_mix_plan(r.mix_plan).empty());
}
