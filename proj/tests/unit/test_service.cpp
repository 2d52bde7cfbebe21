#include <doctest.h>
#include <httplib.h>

#include <thread>

#include "adx3/service.h"
#include "test_support.h"

using namespace adx3;

namespace {

struct Running {
  std::unique_ptr<Service> service;
  std::thread thread;
  int port = 0;

  explicit Running(ServiceOptions opts) : service(std::make_unique<Service>(std::move(opts))) {
    port = service->bind("127.0.0.1", 0);
    thread = std::thread([this] { service->run(); });
  }
  ~Running() {
    service->stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(60, 0);
    return c;
  }
};

ServiceOptions options(const std::filesystem::path& storage, bool persist) {
  ServiceOptions o;
  o.config = load_pipeline_config(test::fixture_dir() / "config.json");
  o.config.service.storage_dir = storage;
  o.persist = persist;
  return o;
}

httplib::Headers as(const std::string& who) { return {{kAuthorHeader, who}}; }

Json body_of(const httplib::Result& r) {
  REQUIRE(r);
  return Json::parse(r->body);
}

std::string post_asset_and_generate(httplib::Client& c, const std::string& owner) {
  const std::string asset = test::read_text(test::fixture_dir() / "asset.json");
  auto r = c.Post("/assets", asset, "application/json");
  REQUIRE(r);
  CHECK(r->status == 201);
  const std::string id = body_of(r)["asset_id"].get<std::string>();
  auto g = owner.empty() ? c.Post(("/assets/" + id + "/genad").c_str(), "", "application/json")
                         : c.Post(("/assets/" + id + "/genad").c_str(), as(owner), "", "application/json");
  REQUIRE(g);
  REQUIRE(g->status == 201);
  const Json gj = body_of(g);
  CHECK(gj["version"] == 1);
  CHECK(gj["decisions"].size() > 0);
  return gj["draft_id"].get<std::string>();
}

std::string revision(int expected, const std::string& event_id, const Json& before, const Json& after,
                     const char* kind = "edit_text") {
  return Json{{"expected_version", expected},
              {"ops", Json::array({{{"event_id", event_id}, {"kind", kind}, {"before", before}, {"after", after}}})}}
      .dump();
}

}  // namespace

TEST_CASE("health and unknown resources") {
  Running s(options(test::fresh_dir("svc-health"), false));
  auto c = s.client();
  auto h = c.Get("/healthz");
  REQUIRE(h);
  CHECK(h->status == 200);
  CHECK(c.Get("/drafts/nope")->status == 404);
  CHECK(c.Post("/assets/nope/genad", "", "application/json")->status == 404);
  CHECK(c.Post("/assets", "{not json", "application/json")->status == 400);
  CHECK(c.Post("/adapt/describe", R"({"asset_id":"nope","time":1.0})", "application/json")->status == 404);
}

TEST_CASE("draft lifecycle over HTTP") {
  Running s(options(test::fresh_dir("svc-life"), false));
  auto c = s.client();
  const std::string id = post_asset_and_generate(c, "alice");
  const std::string base = "/drafts/" + id;

  Json d = body_of(c.Get(base.c_str()));
  CHECK(d["owner_id"] == "alice");
  CHECK(d["collab_enabled"] == true);
  CHECK(d["published"] == false);
  const Json first = d["track"]["events"][0];
  const std::string ev = first["event_id"].get<std::string>();
  const std::string text = first["text"].get<std::string>();

  auto r = c.Post((base + "/revisions").c_str(), as("bob"), revision(1, ev, text, "A brown dog runs."),
                  "application/json");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(body_of(r)["version"] == 2);

  auto stale = c.Post((base + "/revisions").c_str(), as("bob"), revision(1, ev, text, "Other."),
                      "application/json");
  CHECK(stale->status == 409);
  CHECK(body_of(stale)["current_version"] == 2);

  auto mismatch = c.Post((base + "/revisions").c_str(), as("bob"), revision(2, ev, "wrong", "Other."),
                         "application/json");
  CHECK(mismatch->status == 422);
  CHECK(body_of(mismatch)["violations"][0]["rule"] == "before_mismatch");

  auto nudge = c.Post((base + "/events/" + ev + "/nudge").c_str(), as("alice"),
                      R"({"expected_version":2,"frames":-1000000})", "application/json");
  REQUIRE(nudge);
  CHECK(nudge->status == 200);
  CHECK(body_of(nudge)["start_time"] == 0.0);
  CHECK(body_of(nudge)["version"] == 3);

  CHECK(c.Post((base + "/collab").c_str(), as("bob"), R"({"enabled":false})", "application/json")->status ==
        200);  // bob authored a revision
  CHECK(c.Post((base + "/collab").c_str(), as("carol"), R"({"enabled":false})", "application/json")->status ==
        403);
  auto blocked = c.Post((base + "/revisions").c_str(), as("bob"), revision(3, ev, "A brown dog runs.", "X."),
                        "application/json");
  CHECK(blocked->status == 403);

  // Unpublished attribution is visible to authors only.
  CHECK(c.Get((base + "/attribution").c_str(), as("carol"))->status == 403);
  Json a = body_of(c.Get((base + "/attribution").c_str(), as("alice")));
  double total = 0;
  for (const auto& [k, v] : a["shares"].items()) total += v.get<double>();
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(a["shares"].contains("bob"));

  CHECK(c.Post((base + "/publish").c_str(), as("carol"), "", "application/json")->status == 403);
  CHECK(c.Post((base + "/publish").c_str(), as("alice"), "", "application/json")->status == 200);
  auto locked = c.Post((base + "/revisions").c_str(), as("alice"),
                       revision(3, ev, "A brown dog runs.", "X."), "application/json");
  CHECK(locked->status == 423);
  CHECK(c.Get((base + "/attribution").c_str(), as("carol"))->status == 200);
  CHECK(c.Delete((base + "/publish").c_str(), as("alice"))->status == 200);

  auto vtt = c.Get((base + "/export?format=vtt").c_str());
  REQUIRE(vtt);
  CHECK(vtt->status == 200);
  CHECK(vtt->body.rfind("WEBVTT", 0) == 0);
  auto track = c.Get((base + "/export?format=track").c_str());
  CHECK(import_track(track->body).events.size() == d["track"]["events"].size());
  CHECK(c.Get((base + "/export?format=srt").c_str())->status == 400);

  CHECK(c.Post((base + "/feedback").c_str(), as("dana"), R"({"rating":4,"comment":"clear"})",
               "application/json")->status == 201);
  CHECK(c.Post((base + "/feedback").c_str(), as("dana"), R"({"rating":9})", "application/json")->status == 400);
  CHECK(body_of(c.Get(base.c_str()))["feedback"].size() == 1);
}

TEST_CASE("the first human editor of an unowned draft claims it") {
  Running s(options(test::fresh_dir("svc-claim"), false));
  auto c = s.client();
  const std::string id = post_asset_and_generate(c, "");
  const std::string base = "/drafts/" + id;
  Json d = body_of(c.Get(base.c_str()));
  CHECK(d["owner_id"].is_null());
  // Attribution of an unowned draft is open.
  Json a = body_of(c.Get((base + "/attribution").c_str()));
  CHECK(a["shares"]["AI"] == 1.0);
  const Json e = d["track"]["events"][0];
  auto r = c.Post((base + "/revisions").c_str(), as("erin"),
                  revision(1, e["event_id"], e["text"], "A dog."), "application/json");
  CHECK(r->status == 200);
  CHECK(body_of(c.Get(base.c_str()))["owner_id"] == "erin");
  CHECK(c.Post((base + "/revisions").c_str(), revision(2, e["event_id"], "A dog.", "B."), "application/json")
            ->status == 403);
}

TEST_CASE("concurrent revisions: one wins, the rest conflict") {
  Running s(options(test::fresh_dir("svc-race"), false));
  auto c = s.client();
  const std::string id = post_asset_and_generate(c, "alice");
  const std::string base = "/drafts/" + id;
  const Json e = body_of(c.Get(base.c_str()))["track"]["events"][0];

  constexpr int kThreads = 6;
  std::vector<int> status(kThreads, 0);
  std::vector<std::thread> threads;
  for (int i = 0; i < kThreads; ++i) {
    threads.emplace_back([&, i] {
      auto cl = s.client();
      auto r = cl.Post((base + "/revisions").c_str(), as("alice"),
                       revision(1, e["event_id"], e["text"], "Take " + std::to_string(i) + "."),
                       "application/json");
      status[i] = r ? r->status : -1;
    });
  }
  for (auto& t : threads) t.join();
  CHECK(std::count(status.begin(), status.end(), 200) == 1);
  CHECK(std::count(status.begin(), status.end(), 409) == kThreads - 1);
  CHECK(body_of(c.Get(base.c_str()))["version"] == 2);
}

TEST_CASE("on-demand queries") {
  Running s(options(test::fresh_dir("svc-adapt"), false));
  auto c = s.client();
  const std::string asset_id = body_of(c.Post("/assets", test::read_text(test::fixture_dir() / "asset.json"),
                                              "application/json"))["asset_id"];
  CHECK(c.Post("/adapt/describe", Json{{"asset_id", asset_id}, {"time", 5.0}}.dump(), "application/json")
            ->status == 404);
  REQUIRE(c.Post(("/assets/" + asset_id + "/genad").c_str(), "", "application/json")->status == 201);

  auto d = c.Post("/adapt/describe", Json{{"asset_id", asset_id}, {"time", 12.4}}.dump(), "application/json");
  REQUIRE(d);
  CHECK(d->status == 200);
  Json dj = body_of(d);
  CHECK(dj["kind"] == "describe");
  CHECK_FALSE(dj["text"].get<std::string>().empty());
  CHECK(dj["frames"]["exact"]["timestamp"] == 12.0);

  auto q = c.Post("/adapt/question",
                  Json{{"asset_id", asset_id}, {"time", 12.4}, {"question", "What color is the dog?"}}.dump(),
                  "application/json");
  REQUIRE(q);
  CHECK(q->status == 200);
  CHECK(body_of(q)["question"] == "What color is the dog?");
  CHECK(c.Post("/adapt/question", Json{{"asset_id", asset_id}, {"time", 1.0}}.dump(), "application/json")
            ->status == 400);
  CHECK(c.Post("/adapt/describe", Json{{"asset_id", asset_id}, {"time", 999.0}}.dump(), "application/json")
            ->status == 422);
}

TEST_CASE("ratings capture and persistence") {
  const auto dir = test::fresh_dir("svc-ratings");
  const Json rating = {{"rater_id", "r1"},
                       {"video_id", "v1"},
                       {"condition_label", "A"},
                       {"scores",
                        {{"Accurate", 4},
                         {"Prioritized", 4},
                         {"Appropriate", 5},
                         {"Consistent", 3},
                         {"Equal", 4},
                         {"Strategic Use of Description Method", 4},
                         {"Timing & Placement", 2}}}};
  {
    Running s(options(dir, true));
    auto c = s.client();
    CHECK(c.Post("/ratings", rating.dump(), "application/json")->status == 201);
    Json bad = rating;
    bad["scores"]["Accurate"] = 6;
    CHECK(c.Post("/ratings", bad.dump(), "application/json")->status == 422);
    bad = rating;
    bad["scores"]["Accurate"] = "four";
    CHECK(c.Post("/ratings", bad.dump(), "application/json")->status == 422);
    CHECK(body_of(c.Get("/ratings")).size() == 1);
  }
  Running again(options(dir, true));
  auto c = again.client();
  Json all = body_of(c.Get("/ratings"));
  REQUIRE(all.size() == 1);
  CHECK(all[0]["scores"]["Timing & Placement"] == 2);
}

TEST_CASE("drafts survive a restart with file storage") {
  const auto dir = test::fresh_dir("svc-restart");
  std::string id;
  Json before;
  {
    Running s(options(dir, true));
    auto c = s.client();
    id = post_asset_and_generate(c, "alice");
    before = body_of(c.Get(("/drafts/" + id).c_str()));
  }
  Running s(options(dir, true));
  auto c = s.client();
  Json after = body_of(c.Get(("/drafts/" + id).c_str()));
  CHECK(after["track"] == before["track"]);
  CHECK(after["version"] == before["version"]);
  // Query contexts are persisted with the asset.
  CHECK(c.Post("/adapt/describe", Json{{"asset_id", before["asset"]["asset_id"]}, {"time", 3.0}}.dump(),
               "application/json")->status == 200);
}

TEST_CASE("binding a taken port is an environment error") {
  Running s(options(test::fresh_dir("svc-port"), false));
  Service other(options(test::fresh_dir("svc-port2"), false));
  CHECK_THROWS_AS(other.bind("127.0.0.1", s.port), EnvironmentError);
}

TEST_CASE("stop before or during startup ends run") {
  Service early(options(test::fresh_dir("svc-stop1"), false));
  early.bind("127.0.0.1", 0);
  early.stop();
  early.run();
  CHECK_FALSE(early.running());

  for (int i = 0; i < 20; ++i) {
    Service s(options(test::fresh_dir("svc-stop2"), false));
    s.bind("127.0.0.1", 0);
    std::thread t([&] { s.run(); });
    s.stop();
    t.join();
    CHECK_FALSE(s.running());
  }
}
