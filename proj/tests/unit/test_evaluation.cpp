#include <doctest.h>

#include "mathgen/error.hpp"
#include "mathgen/evaluation.hpp"
#include "mathgen/records.hpp"
#include "support.hpp"

using namespace mathgen;

namespace {

const TemplateSet& templates() {
    static const auto t = TemplateSet::defaults();
    return t;
}

GenerationContext ctx(DifficultyLevel d = DifficultyLevel::Medium) {
    GenerationContext c{"Percents", d, {}, false, false};
    ProblemRecord r{"1", "Percents", "What is 10% of 90?", 0.8, DifficultyLevel::Easy};
    c.examples.push_back({r, DifficultyLevel::Easy});
    return c;
}

const QAPair kPair{"What is 15% of 80?", "12", std::nullopt};

}  // namespace

TEST_CASE("metric names") {
    CHECK(to_string(Metric::DifficultyMatching) == "difficulty_matching");
    CHECK(display_name(Metric::DifficultyMatching) == "Difficulty Matching");
    CHECK(parse_metric("Difficulty Matching") == Metric::DifficultyMatching);
    CHECK(parse_metric("clarity") == Metric::Clarity);
    CHECK_THROWS_AS(parse_metric("style"), ConfigError);
}

TEST_CASE("one judge call per metric") {
    SUBCASE("SCORE: 5") {
        ScriptedBackend mock({"SCORE: 5"});
        AgentEnv env{mock, templates(), {}, nullptr};
        CHECK(judge_metric(kPair, Metric::Clarity, ctx(), env) == 5);
        CHECK(mock.requests()[0].temperature == 0.0);
        CHECK(mock.requests()[0].model == "gpt-4");
    }
    SUBCASE("SCORE: 0 is an error") {
        ScriptedBackend mock({"SCORE: 0", "SCORE: 0", "SCORE: 0"});
        AgentEnv env{mock, templates(), {}, nullptr};
        CHECK_THROWS_AS(judge_metric(kPair, Metric::Clarity, ctx(), env), TurnFailed);
    }
}

TEST_CASE("difficulty matching prompt names the requested difficulty") {
    const auto msgs = render_judge_prompt(templates(), kPair, Metric::DifficultyMatching, ctx(DifficultyLevel::Hard));
    std::string all;
    for (const auto& m : msgs) all += m.content;
    CHECK(all.find("hard") != std::string::npos);
    CHECK(all.find("Difficulty Matching") != std::string::npos);
    CHECK(all.find("What is 15% of 80?") != std::string::npos);
}

TEST_CASE("relevance prompt shows the example questions") {
    const auto msgs = render_judge_prompt(templates(), kPair, Metric::Relevance, ctx());
    CHECK(msgs[1].content.find("What is 10% of 90?") != std::string::npos);
}

TEST_CASE("evaluate makes five calls in metric order") {
    ScriptedBackend mock({"SCORE: 3", "SCORE: 4", "SCORE: 5", "SCORE: 2", "SCORE: 1"});
    AgentEnv env{mock, templates(), {}, nullptr};
    const auto s = evaluate(kPair, ctx(), env);
    CHECK(s.values == std::array<int, 5>{3, 4, 5, 2, 1});
    CHECK(s.avg_score == doctest::Approx(3.0));
    CHECK(mock.calls() == 5);
    CHECK(mock.requests()[3].messages[0].content.find("Difficulty Matching") != std::string::npos);
}

TEST_CASE("combined mode uses a single call") {
    ScriptedBackend mock({"CLARITY: 4\nRELEVANCE: 5\nIMPORTANCE: 3\nDIFFICULTY_MATCHING: 5\nANSWERABILITY: 4"});
    AgentEnv env{mock, templates(), {}, nullptr};
    const auto s = evaluate(kPair, ctx(), env, JudgeMode::Combined);
    CHECK(s.values == std::array<int, 5>{4, 5, 3, 5, 4});
    CHECK(mock.calls() == 1);
}

TEST_CASE("average score") {
    CHECK(EvalScores::from({5, 5, 5, 5, 5}).avg_score == 5.0);
    CHECK_THROWS_AS(EvalScores::from({5, 5, 6, 5, 5}), std::out_of_range);
    CHECK_THROWS_AS(average_score({}), std::invalid_argument);

    // Published per-method means.
    const std::array<double, 5> cc = {3.60, 4.99, 4.76, 4.96, 4.94};
    CHECK(render_2dp(average_score(cc)) == "4.65");
    const std::array<double, 5> zs = {3.66, 4.61, 4.67, 4.41, 4.65};
    CHECK(render_2dp(average_score(zs)) == "4.40");
}
