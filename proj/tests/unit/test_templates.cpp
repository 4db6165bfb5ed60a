#include <doctest.h>

#include <fstream>

#include "mathgen/error.hpp"
#include "mathgen/templates.hpp"
#include "support.hpp"

using namespace mathgen;

TEST_CASE("placeholders are substituted") {
    CHECK(render_template("Hi {name}, {name}!", {{"name", "Ada"}}) == "Hi Ada, Ada!");
    CHECK(render_template("{a}{b}", {{"a", "1"}, {"b", "2"}}) == "12");
    // Unknown names and stray braces are left alone.
    CHECK(render_template("{x} {json: 1} {", {{"y", "2"}}) == "{x} {json: 1} {");
    // Substituted text is not re-expanded.
    CHECK(render_template("{a}", {{"a", "{a}"}}) == "{a}");
    CHECK(render_template("", {}) == "");
}

TEST_CASE("every shipped template is compiled in") {
    const auto set = TemplateSet::defaults();
    std::size_t n = 0;
    for (const auto& entry : std::filesystem::directory_iterator(testing::source_path("templates"))) {
        if (entry.path().extension() != ".txt") continue;
        ++n;
        const auto name = entry.path().stem().string();
        CHECK_MESSAGE(set.contains(name), name);
        CHECK(set.get(name) == testing::read_text(entry.path()));
    }
    CHECK(n == 22);
    CHECK_THROWS_AS(set.get("no_such_template"), ConfigError);
}

TEST_CASE("a directory overrides only the files it holds") {
    testing::TempDir dir("templates");
    {
        std::ofstream(dir.path() / "critic_system.txt") << "Be harsh about {kc}.";
        std::ofstream(dir.path() / "notes.md") << "ignored";
    }
    const auto set = TemplateSet::with_overrides(dir.path().string());
    CHECK(set.render("critic_system", {{"kc", "Angles"}}) == "Be harsh about Angles.");
    CHECK(set.get("teacher_system") == TemplateSet::defaults().get("teacher_system"));
    CHECK_FALSE(set.contains("notes"));
    CHECK_THROWS_AS(TemplateSet::with_overrides((dir.path() / "missing").string()), ConfigError);
}
