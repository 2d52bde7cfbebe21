#include <doctest.h>

#include "adx3/adaptad.h"
#include "adx3/mock_providers.h"
#include "test_support.h"

using namespace adx3;
using adx3::test::frame;
using adx3::test::make_asset;
using adx3::test::make_event;
using adx3::test::make_track;
using adx3::test::word;

namespace {

AdaptContext context() {
  AdaptContext ctx;
  ctx.asset = make_asset("a", 30.0);
  ctx.asset.title = "Forest Walk";
  for (int i = 0; i <= 30; ++i) ctx.frames.push_back(frame(i, i, {}));
  const std::vector<Seconds> bounds{10.0, 20.0};
  ctx.scenes = build_scenes(bounds, ctx.asset, ctx.frames);
  ctx.transcript.words = {word("early", 2, 3), word("middle", 12, 13), word("PAST_PAUSE", 16, 17),
                          word("LATER_SCENE", 22, 23)};
  ctx.track = make_track("a", {make_event("e1", 3, 1, EventType::Visual, Delivery::Inline, "A path."),
                               make_event("e2", 14, 1, EventType::Visual, Delivery::Inline, "A deer."),
                               make_event("e3", 18, 1, EventType::Visual, Delivery::Inline,
                                          "FUTURE_DESCRIPTION")});
  return ctx;
}

AdaptOptions fast() {
  AdaptOptions o;
  o.retry.base_delay = std::chrono::milliseconds(0);
  o.retry.attempts = 1;
  return o;
}

}  // namespace

TEST_CASE("frame selection") {
  const auto ctx = context();
  auto p = select_frames(12.4, ctx.scenes, ctx.frames, ctx.asset);
  CHECK(p.exact.frame_index == 12);
  CHECK(p.keyframe.frame_index == 15);
  // Pausing on the keyframe itself borrows the previous scene's keyframe.
  p = select_frames(15.0, ctx.scenes, ctx.frames, ctx.asset);
  CHECK(p.exact.frame_index == 15);
  CHECK(p.keyframe.frame_index == 5);
  p = select_frames(5.0, ctx.scenes, ctx.frames, ctx.asset);
  CHECK(p.keyframe.frame_index == 15);
  CHECK_THROWS_AS(select_frames(31.0, ctx.scenes, ctx.frames, ctx.asset), RangeError);
  CHECK_THROWS_AS(select_frames(1.0, ctx.scenes, {}, ctx.asset), NoFrames);
}

TEST_CASE("context never includes material after the pause") {
  const auto ctx = context();
  const auto info = scene_info_text(ctx, 15.0);
  CHECK(info.find("early") != std::string::npos);
  CHECK(info.find("middle") != std::string::npos);
  CHECK(info.find("A deer.") != std::string::npos);
  CHECK(info.find("PAST_PAUSE") == std::string::npos);
  CHECK(info.find("LATER_SCENE") == std::string::npos);
  CHECK(info.find("FUTURE_DESCRIPTION") == std::string::npos);
  CHECK(info.find("CUMULATIVE TRANSCRIPT:\nearly") != std::string::npos);
  CHECK(info.find("CURRENT SCENE TRANSCRIPT:\nmiddle") != std::string::npos);
}

TEST_CASE("first sentence and frame mentions") {
  CHECK(first_sentence("  It rains. Then sun.") == "It rains.");
  CHECK(first_sentence("Dr. Smith waves") == "Dr.");
  CHECK(first_sentence("No terminator") == "No terminator.");
  CHECK(first_sentence("3.5 metres tall!") == "3.5 metres tall!");
  CHECK(first_sentence("") == "");
  CHECK(mentions_frame_or_timestamp("In frame 12 a dog appears."));
  CHECK(mentions_frame_or_timestamp("At frame #3."));
  CHECK(mentions_frame_or_timestamp("See the timestamp."));
  CHECK(mentions_frame_or_timestamp("Time-stamps show it."));
  CHECK_FALSE(mentions_frame_or_timestamp("The frame of the door is red."));
}

TEST_CASE("describe sends both frames and speaks one sentence") {
  const auto ctx = context();
  auto vlm = ScriptedVlm::sequence({"A deer drinks. It looks up."});
  MockTts tts;
  const auto r = describe_now(ctx, 15.0, vlm, &tts, fast());
  CHECK(r.text == "A deer drinks.");
  CHECK(r.audio_uri.has_value());
  CHECK(r.audio_uri->find("/female/") != std::string::npos);
  const auto call = vlm.calls().at(0);
  REQUIRE(call.images.size() == 2);
  CHECK(call.images[0].frame_index == 5);
  CHECK(call.images[1].frame_index == 15);
  CHECK(call.prompt == build_describe_prompt(ctx, 15.0, r.frames));
  CHECK(call.prompt.find("describe the scene") != std::string::npos);
  CHECK(call.prompt.find("FUTURE_DESCRIPTION") == std::string::npos);
  CHECK(to_json(r)["text"] == "A deer drinks.");
}

TEST_CASE("describe failures are unavailable") {
  const auto ctx = context();
  auto down = ScriptedVlm::sequence({});
  CHECK_THROWS_AS(describe_now(ctx, 5.0, down, nullptr, fast()), Unavailable);
  auto empty = ScriptedVlm::sequence({"   "});
  CHECK_THROWS_AS(describe_now(ctx, 5.0, empty, nullptr, fast()), Unavailable);
  auto fine = ScriptedVlm::sequence({"A path."});
  MockTts tts;
  tts.fail_on("A path.");
  CHECK_THROWS_AS(describe_now(ctx, 5.0, fine, &tts, fast()), Unavailable);
}

TEST_CASE("questions re-ask once on frame references") {
  const auto ctx = context();
  SUBCASE("second reply is clean") {
    auto vlm = ScriptedVlm::sequence({"In frame 15 there is a deer.", "A deer stands by water."});
    const auto r = answer_question(ctx, 15.0, " What animal is that? ", vlm, nullptr, fast());
    CHECK(r.text == "A deer stands by water.");
    CHECK(r.question == "What animal is that?");
    CHECK(vlm.call_count() == 2);
    CHECK(vlm.calls()[0].prompt.find("What animal is that?") != std::string::npos);
  }
  SUBCASE("second reply still references frames") {
    auto vlm = ScriptedVlm::sequence({"Frame 3.", "At timestamp 4 a deer."});
    CHECK_THROWS_AS(answer_question(ctx, 15.0, "What?", vlm, nullptr, fast()), Unavailable);
  }
  SUBCASE("empty question") {
    auto vlm = ScriptedVlm::sequence({});
    CHECK_THROWS_AS(answer_question(ctx, 15.0, "  ", vlm, nullptr, fast()), InvalidArgument);
  }
}

TEST_CASE("context JSON round-trip drops vectors only") {
  auto ctx = context();
  const auto back = adapt_context_from_json(to_json(ctx));
  CHECK(back.asset == ctx.asset);
  CHECK(back.scenes == ctx.scenes);
  CHECK(back.frames.size() == ctx.frames.size());
  CHECK(back.frames[3].image_uri == "frame://3");
  CHECK(back.transcript.words.size() == 4);
  CHECK(export_track(back.track) == export_track(ctx.track));
}
