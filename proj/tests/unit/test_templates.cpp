#include <doctest.h>

#include "adx3/model.h"
#include "adx3/templates.h"
#include "test_support.h"

using namespace adx3;
namespace fs = std::filesystem;

namespace {

std::optional<PromptId> prompt_by_name(std::string_view name) {
  for (std::size_t i = 0; i < kPromptCount; ++i) {
    const auto id = static_cast<PromptId>(i);
    if (template_name(id) == name) return id;
  }
  return std::nullopt;
}

// Nested objects become Python-style subscript keys: {"clip": {"text": v}} -> "clip['text']".
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

}  // namespace

TEST_CASE("every builtin template renders its golden file byte for byte") {
  const auto cases = Json::parse(test::read_text(test::golden_dir() / "cases.json"));
  REQUIRE(cases.size() >= 9);
  const auto& store = TemplateStore::builtin();
  for (const auto& c : cases) {
    const std::string name = c["name"];
    CAPTURE(name);
    const auto id = prompt_by_name(c["template"].get<std::string>());
    REQUIRE(id.has_value());
    TemplateValues values;
    flatten(c["values"], "", values);
    if (*id == PromptId::GuidelinesPrompt) values["guidelines"] = store.text(PromptId::Guidelines);
    const std::string golden = test::read_text(test::golden_dir() / (name + ".golden"));
    CHECK(store.render(*id, values) == golden);
  }
}

TEST_CASE("template files on disk match the embedded copies") {
  const auto dir = test::source_dir() / "core" / "templates";
  const auto loaded = TemplateStore::load(dir);
  for (std::size_t i = 0; i < kPromptCount; ++i) {
    const auto id = static_cast<PromptId>(i);
    CHECK(loaded.text(id) == TemplateStore::builtin().text(id));
  }
}

TEST_CASE("loading from a directory missing a template fails") {
  const auto dir = test::fresh_dir("templates-partial");
  test::write_text(dir / "guidelines.txt", "x");
  CHECK_THROWS_AS(TemplateStore::load(dir), TemplateError);
}

TEST_CASE("renderer substitutions") {
  CHECK(render_template("a {x} b", {{"x", std::string("1")}}) == "a 1 b");
  CHECK(render_template("{d:.2f}", {{"d", 2.675}}) == "2.67");
  CHECK(render_template("{d:.2f}", {{"d", 1.005}}) == "1.00");
  CHECK(render_template("{d:.1f}", {{"d", 0.25}}) == "0.2");
  CHECK(render_template("{d}", {{"d", 3.0}}) == "3.0");
  CHECK(render_template("{d}", {{"d", 2.5}}) == "2.5");
  CHECK(render_template("{{literal}} {x}", {{"x", std::string("y")}}) == "{literal} y");
  CHECK(render_template("{a - b:.2f}", {{"a - b", 1.5}}) == "1.50");
  CHECK(render_template("{a - b:.2f}", {{"a", 5.0}, {"b", 3.5}}) == "1.50");
  CHECK_THROWS_AS(render_template("{a - b}", {{"a", 5.0}, {"b", std::string("x")}}), TemplateError);
  CHECK_THROWS_AS(render_template("{a - c}", {{"a", 5.0}}), TemplateError);
  CHECK(render_template("{clip['text']}", {{"clip['text']", std::string("t")}}) == "t");
}

TEST_CASE("renderer errors") {
  CHECK_THROWS_AS(render_template("{missing}", {}), TemplateError);
  CHECK_THROWS_AS(render_template("{open", {{"open", std::string("")}}), TemplateError);
  CHECK_THROWS_AS(render_template("{x:>10}", {{"x", std::string("")}}), TemplateError);
  CHECK_THROWS_AS(render_template("{x:.2f}", {{"x", std::string("s")}}), TemplateError);
}

TEST_CASE("placeholders in order of first appearance") {
  const auto p = template_placeholders("{b} {a:.2f} {b} {{no}}");
  REQUIRE(p.size() == 2);
  CHECK(p[0] == "b");
  CHECK(p[1] == "a");
}
