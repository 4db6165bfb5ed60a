#include <doctest.h>

#include <algorithm>
#include <fstream>

#include "mathgen/error.hpp"
#include "mathgen/records.hpp"
#include "support.hpp"

using namespace mathgen;
using testing::scored_record;

namespace {

RunRecord full_record() {
    RunRecord r = scored_record("CC", {4, 5, 4, 5, 3});
    r.workflow = WorkflowKind::CC;
    r.curation = CurationMode::Bloom;
    r.rounds = 3;
    r.n_agents = 2;
    r.agent_rounds = 6;
    r.strategy = SamplingStrategy::PromptingSimple;
    r.autocot = true;
    r.pool_size = 3;
    r.plan_seed = 9;
    r.generator_model = "gpt-4o";
    r.judge_model = "gpt-4";
    r.backend = "mock";
    r.kc = "Fractions";
    r.difficulty = DifficultyLevel::Hard;
    r.repetition = 2;
    r.run_id = fingerprint_hash(r.fingerprint());
    r.run_seed = 12345;
    r.candidates.push_back({{"Q1", "A1", "R1"}, 4, 77, 7, true, false});
    r.candidates.push_back({{"Q2", "A2", std::nullopt}, std::nullopt, 78, 7, std::nullopt, std::nullopt});
    r.chosen_index = 0;
    r.chosen = r.candidates[0].pair;
    r.usage = {100, 20};
    r.calls = 12;
    r.started_at = "2026-01-01T00:00:00Z";
    r.wall_ms = 12.5;
    return r;
}

}  // namespace

TEST_CASE("method labels") {
    CHECK(method_label(WorkflowKind::BaselineZS, CurationMode::None) == "Baseline_ZS");
    CHECK(method_label(WorkflowKind::BaselineFS, CurationMode::None) == "Baseline_FS");
    CHECK(method_label(WorkflowKind::TCC, CurationMode::Bloom) == "TCC");
    CHECK(method_label(WorkflowKind::TCC, CurationMode::Random) == "TCC_RC");
    CHECK(method_label(WorkflowKind::CC, CurationMode::Bloom) == "CC");
    CHECK(method_label(WorkflowKind::CC, CurationMode::Random) == "CC_RC");
    CHECK(parse_curation("RC") == CurationMode::Random);
    CHECK_THROWS_AS(parse_curation("best"), ConfigError);
}

TEST_CASE("records round-trip through JSON") {
    const auto r = full_record();
    const auto j = r.to_json();
    const auto back = RunRecord::from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.to_json() == j);
    CHECK(back.agent_rounds == 6);
    CHECK(back.candidates[0].pair.reasoning == "R1");
    CHECK(back.scores.values == r.scores.values);
}

TEST_CASE("fingerprint hash is stable and sensitive") {
    auto r = full_record();
    const auto h = fingerprint_hash(r.fingerprint());
    CHECK(h.size() == 16);
    CHECK(h == fingerprint_hash(r.fingerprint()));
    r.repetition = 3;
    CHECK(h != fingerprint_hash(r.fingerprint()));
    r.repetition = 2;
    r.plan_seed = 10;
    CHECK(h != fingerprint_hash(r.fingerprint()));
    CHECK(fingerprint_hash(nlohmann::json::object()) == "44136fa355b3678a");
}

TEST_CASE("timing is removed for comparisons") {
    auto a = full_record();
    auto b = full_record();
    b.wall_ms = 99;
    b.started_at = "later";
    CHECK(a.to_json() != b.to_json());
    CHECK(without_timing(a.to_json()) == without_timing(b.to_json()));
}

TEST_CASE("reading records reports the failing line") {
    testing::TempDir dir("records");
    const auto path = dir.path() / "runs.jsonl";
    {
        std::ofstream out(path);
        out << full_record().to_json().dump() << "\n\n{broken\n";
    }
    try {
        read_records(path);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    CHECK_THROWS_AS(read_records(dir.path() / "missing.jsonl"), ConfigError);
}

TEST_CASE("group means") {
    std::vector<RunRecord> recs = {scored_record("A", {3, 5, 5, 5, 5}), scored_record("A", {4, 5, 5, 5, 5})};
    const auto rows = aggregate(recs, {"method"});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].means[0] == 3.5);
    CHECK(rows[0].count == 2);
    CHECK(rows[0].avg_score == doctest::Approx(4.7));
}

TEST_CASE("six methods by three difficulties give eighteen groups") {
    std::vector<RunRecord> recs;
    for (auto m : {"Baseline_ZS", "Baseline_FS", "CC_RC", "TCC_RC", "CC", "TCC"}) {
        for (auto d : {DifficultyLevel::Easy, DifficultyLevel::Medium, DifficultyLevel::Hard}) {
            auto r = scored_record(m, {4, 4, 4, 4, 4});
            r.difficulty = d;
            recs.push_back(r);
            recs.push_back(r);
        }
    }
    const auto rows = aggregate(recs, {"method", "difficulty"});
    CHECK(rows.size() == 18);
    for (const auto& row : rows) CHECK(row.count == 2);
}

TEST_CASE("aggregation does not depend on record order") {
    Rng rng(4);
    std::vector<RunRecord> recs;
    for (int i = 0; i < 60; ++i) {
        std::array<int, 5> s{};
        for (auto& v : s) v = static_cast<int>(1 + uniform_index(rng, 5));
        auto r = scored_record(i % 3 == 0 ? "CC" : "TCC", s);
        r.rounds = static_cast<int>(2 + uniform_index(rng, 4));
        recs.push_back(r);
    }
    const auto base = aggregate(recs, {"method", "rounds"});
    for (int t = 0; t < 20; ++t) {
        shuffle(recs.begin(), recs.end(), rng);
        const auto again = aggregate(recs, {"method", "rounds"});
        REQUIRE(again.size() == base.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK(again[i].key == base[i].key);
            CHECK(again[i].means == base[i].means);
            CHECK(again[i].avg_score == base[i].avg_score);
        }
    }
}

TEST_CASE("group keys sort numerically") {
    std::vector<RunRecord> recs;
    for (int ar : {12, 4, 6, 20, 9}) {
        auto r = scored_record("CC", {3, 3, 3, 3, 3});
        r.agent_rounds = ar;
        recs.push_back(r);
    }
    const auto rows = aggregate(recs, {"agent_rounds"});
    std::vector<std::string> keys;
    for (const auto& row : rows) keys.push_back(row.key[0]);
    CHECK(keys == std::vector<std::string>{"4", "6", "9", "12", "20"});
}

TEST_CASE("two-decimal rendering") {
    CHECK(render_2dp(4.638) == "4.64");
    CHECK(render_2dp(4.418) == "4.42");
    CHECK(render_2dp(4.342) == "4.34");
    CHECK(render_2dp(4.4) == "4.40");
    CHECK(render_2dp(4.445) == "4.45");
    CHECK(render_2dp(0.125) == "0.13");
    CHECK(render_2dp(5) == "5.00");
    CHECK(render_2dp(-1.005) == "-1.01");
    // Mean of the published TCC row.
    CHECK(render_2dp((3.75 + 4.92 + 4.70 + 4.88 + 4.94) / 5) == "4.64");
}

TEST_CASE("score histogram") {
    std::vector<RunRecord> fives(7, scored_record("CC", {5, 5, 5, 5, 5}));
    CHECK(score_histogram(fives, Metric::Clarity) == std::array<std::size_t, 5>{0, 0, 0, 0, 7});
    CHECK(score_histogram({}, Metric::Clarity) == std::array<std::size_t, 5>{});

    Rng rng(12);
    std::vector<RunRecord> recs;
    for (int i = 0; i < 123; ++i) {
        std::array<int, 5> s{};
        for (auto& v : s) v = static_cast<int>(1 + uniform_index(rng, 5));
        recs.push_back(scored_record("X", s));
    }
    for (auto m : kMetrics) {
        const auto bins = score_histogram(recs, m);
        std::size_t total = 0;
        for (auto b : bins) total += b;
        CHECK(total == 123);
    }
}
