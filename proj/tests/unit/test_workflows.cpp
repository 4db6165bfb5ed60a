#include <doctest.h>

#include <set>

#include "mathgen/error.hpp"
#include "mathgen/workflows.hpp"
#include "support.hpp"

using namespace mathgen;

namespace {

const TemplateSet& templates() {
    static const auto t = TemplateSet::defaults();
    return t;
}

const Corpus& corpus() {
    static const auto c = assign_difficulty(testing::synthetic_corpus(30, {"Ratios", "Angles"}));
    return c;
}

WorkflowConfig config(WorkflowKind kind, int rounds = 2, int agents = 2, std::uint64_t seed = 42) {
    WorkflowConfig c;
    c.kind = kind;
    c.rounds = rounds;
    c.n_agents = agents;
    c.run_seed = seed;
    return c;
}

std::string qa(int i) {
    return "QUESTION: Question number " + std::to_string(i) + "?\nANSWER: " + std::to_string(i);
}

TranscriptMessage versatile(int agent, int round, AgentDecision d) {
    TranscriptMessage m;
    m.speaker = {AgentRole::Versatile, agent};
    m.round = round;
    m.decision = std::move(d);
    return m;
}

AgentDecision agree(int target) { return {DecisionKind::Agree, std::nullopt, "looks good", target}; }
AgentDecision fresh(int i) { return {DecisionKind::New, QAPair{"Q" + std::to_string(i), "A", std::nullopt}, {}, {}}; }
AgentDecision revise(int target, int i) {
    return {DecisionKind::Revise, QAPair{"Q" + std::to_string(i), "A", std::nullopt}, "tweak", target};
}

}  // namespace

TEST_CASE("config ranges") {
    CHECK_NOTHROW(config(WorkflowKind::TCC, 2).validate());
    CHECK_NOTHROW(config(WorkflowKind::TCC, 5).validate());
    CHECK_THROWS_AS(config(WorkflowKind::TCC, 1).validate(), ConfigError);
    CHECK_THROWS_AS(config(WorkflowKind::TCC, 6).validate(), ConfigError);
    CHECK_THROWS_AS(config(WorkflowKind::CC, 2, 1).validate(), ConfigError);
    CHECK_THROWS_AS(config(WorkflowKind::CC, 2, 5).validate(), ConfigError);
    auto c = config(WorkflowKind::BaselineFS);
    c.autocot = c.solution_generation = true;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("zero-shot baseline makes one call and has no examples") {
    ScriptedBackend mock({qa(1)});
    AgentEnv env{mock, templates(), {}, nullptr};
    const auto cfg = config(WorkflowKind::BaselineZS);
    const auto ctx = build_context(corpus(), "Ratios", DifficultyLevel::Easy, cfg);
    CHECK(ctx.examples.empty());
    const auto out = run_workflow(ctx, cfg, env);
    CHECK(out.transcript.size() == 1);
    CHECK(out.final_pair.question == "Question number 1?");
    CHECK(out.candidates.size() == 1);
    CHECK(mock.calls() == 1);
    CHECK(mock.requests()[0].messages[1].content.find("Example") == std::string::npos);
}

TEST_CASE("zero-shot baseline surfaces a structured error after failed retries") {
    ScriptedBackend mock({"no", "still no", "nope"});
    AgentEnv env{mock, templates(), {}, nullptr};
    const auto cfg = config(WorkflowKind::BaselineZS);
    const auto ctx = build_context(corpus(), "Ratios", DifficultyLevel::Easy, cfg);
    CHECK_THROWS_AS(run_workflow(ctx, cfg, env), TurnFailed);
}

TEST_CASE("few-shot baseline embeds k examples chosen by the seed") {
    auto cfg = config(WorkflowKind::BaselineFS);
    cfg.k = 4;
    const auto a = build_context(corpus(), "Ratios", DifficultyLevel::Medium, cfg);
    const auto b = build_context(corpus(), "Ratios", DifficultyLevel::Medium, cfg);
    REQUIRE(a.examples.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(a.examples[i].record.problem_id == b.examples[i].record.problem_id);

    ScriptedBackend mock({qa(7)});
    AgentEnv env{mock, templates(), {}, nullptr};
    const auto out = run_workflow(a, cfg, env);
    CHECK(out.final_pair.answer == "7");
    const auto& prompt = mock.requests()[0].messages[1].content;
    for (const auto& ex : a.examples) CHECK(prompt.find(ex.record.body) != std::string::npos);
    CHECK(prompt.find("Example 4") != std::string::npos);
    CHECK(prompt.find("Example 5") == std::string::npos);
}

TEST_CASE("TCC alternates critic and teacher for R rounds") {
    for (int r = 2; r <= 5; ++r) {
        std::vector<std::string> script = {qa(0)};
        for (int i = 1; i <= r; ++i) {
            script.push_back("FEEDBACK: critique " + std::to_string(i));
            script.push_back(qa(i));
        }
        ScriptedBackend mock(script);
        AgentEnv env{mock, templates(), {}, nullptr};
        const auto cfg = config(WorkflowKind::TCC, r);
        const auto out = run_workflow(build_context(corpus(), "Ratios", DifficultyLevel::Hard, cfg), cfg, env);
        CHECK(out.transcript.size() == static_cast<std::size_t>(1 + 2 * r));
        CHECK(out.transcript.size() == expected_transcript_length(cfg));
        CHECK(out.candidates.size() == static_cast<std::size_t>(r + 1));
        CHECK(out.final_pair.answer == std::to_string(r));
        CHECK(out.final_index == static_cast<std::size_t>(r));
        const auto& msgs = out.transcript.messages();
        for (std::size_t i = 0; i < msgs.size(); ++i) {
            CHECK(msgs[i].speaker.role == (i % 2 == 0 ? AgentRole::Teacher : AgentRole::Critic));
        }
    }
}

TEST_CASE("a critic that writes a question is recorded as feedback only") {
    ScriptedBackend mock({qa(0), "QUESTION: A brand new one?\nANSWER: 3", qa(1), "FEEDBACK: ok", qa(2)});
    AgentEnv env{mock, templates(), {}, nullptr};
    const auto cfg = config(WorkflowKind::TCC, 2);
    const auto out = run_workflow(build_context(corpus(), "Ratios", DifficultyLevel::Hard, cfg), cfg, env);
    const auto& critic = out.transcript.messages()[1];
    CHECK_FALSE(critic.pair.has_value());
    REQUIRE(critic.feedback.has_value());
    CHECK(critic.feedback->find("A brand new one?") != std::string::npos);
    CHECK(out.candidates.size() == 3);
}

TEST_CASE("TCC revision prompts carry the latest critique") {
    ScriptedBackend mock({qa(0), "FEEDBACK: mention the unit price", qa(1), "FEEDBACK: fine", qa(2)});
    AgentEnv env{mock, templates(), {}, nullptr};
    const auto cfg = config(WorkflowKind::TCC, 2);
    run_workflow(build_context(corpus(), "Ratios", DifficultyLevel::Hard, cfg), cfg, env);
    CHECK(mock.requests()[2].messages[1].content.find("mention the unit price") != std::string::npos);
}

TEST_CASE("CC selects the CEO's choice") {
    // A=3, R=2: NEW p1, AGREE 1, REVISE 1 -> p2, then AGREE 2 x3, CEO picks 2.
    ScriptedBackend mock({
        "DECISION: NEW\nQUESTION: p1?\nANSWER: 1",
        "DECISION: AGREE\nTARGET: 1\nFEEDBACK: fine",
        "DECISION: REVISE\nTARGET: 1\nQUESTION: p2?\nANSWER: 2\nFEEDBACK: clearer",
        "DECISION: AGREE\nTARGET: 2\nFEEDBACK: yes",
        "DECISION: AGREE\nTARGET: 2\nFEEDBACK: yes",
        "DECISION: AGREE\nTARGET: 2\nFEEDBACK: yes",
        "CONSENSUS: yes\nCHOICE: 2",
    });
    AgentEnv env{mock, templates(), {}, nullptr};
    const auto cfg = config(WorkflowKind::CC, 2, 3);
    const auto out = run_workflow(build_context(corpus(), "Angles", DifficultyLevel::Medium, cfg), cfg, env);
    CHECK(out.transcript.size() == 7);
    CHECK(out.final_pair.question == "p2?");
    CHECK(out.final_index == 1);
    CHECK(out.candidates.size() == 2);
    CHECK(out.candidates[1].revises == 1);
    CHECK(out.consensus_reported == true);
    // Candidate 2 was written by agent 3 in round 1; in round 2 agents 1 and 2 agree on it.
    CHECK(out.rule_consensus == true);
    CHECK(out.rule_consensus_candidate == 2);
    CHECK(out.transcript.back().speaker.role == AgentRole::Ceo);

    const auto reqs = mock.requests();
    CHECK(reqs[6].model == "gpt-4");
    CHECK(reqs[6].temperature == 0.0);
    // Each agent reuses its own decoding parameters in both rounds.
    for (int a = 0; a < 3; ++a) {
        CHECK(reqs[a].temperature == reqs[a + 3].temperature);
        CHECK(reqs[a].sampling_seed == reqs[a + 3].sampling_seed);
    }
    std::set<std::int64_t> seeds{*reqs[0].sampling_seed, *reqs[1].sampling_seed, *reqs[2].sampling_seed};
    CHECK(seeds.size() == 3);
}

TEST_CASE("the first CC turn is restricted to NEW") {
    ScriptedBackend mock({
        "DECISION: AGREE\nTARGET: 1\nFEEDBACK: nothing to agree with",
        "DECISION: NEW\nQUESTION: p1?\nANSWER: 1",
        "DECISION: AGREE\nTARGET: 1\nFEEDBACK: ok",
        "DECISION: AGREE\nTARGET: 1\nFEEDBACK: ok",
        "DECISION: AGREE\nTARGET: 1\nFEEDBACK: ok",
        "CONSENSUS: yes\nCHOICE: 1",
    });
    AgentEnv env{mock, templates(), {}, nullptr};
    const auto cfg = config(WorkflowKind::CC, 2, 2);
    const auto out = run_workflow(build_context(corpus(), "Angles", DifficultyLevel::Medium, cfg), cfg, env);
    CHECK(out.transcript.messages()[0].attempts == 2);
    CHECK(out.transcript.size() == 5);
    CHECK(out.final_pair.question == "p1?");
}

TEST_CASE("CEO choice outside the candidates fails the run") {
    ScriptedBackend mock({
        "DECISION: NEW\nQUESTION: p1?\nANSWER: 1",
        "DECISION: AGREE\nTARGET: 1\nFEEDBACK: ok",
        "DECISION: AGREE\nTARGET: 1\nFEEDBACK: ok",
        "DECISION: AGREE\nTARGET: 1\nFEEDBACK: ok",
        "CONSENSUS: yes\nCHOICE: 4",
        "CONSENSUS: yes\nCHOICE: 4",
        "CONSENSUS: yes\nCHOICE: 4",
    });
    AgentEnv env{mock, templates(), {}, nullptr};
    const auto cfg = config(WorkflowKind::CC, 2, 2);
    CHECK_THROWS_AS(run_workflow(build_context(corpus(), "Angles", DifficultyLevel::Medium, cfg), cfg, env),
                    TurnFailed);
}

TEST_CASE("scripted runs are reproducible") {
    for (auto kind : {WorkflowKind::TCC, WorkflowKind::CC}) {
        auto once = [&] {
            auto mock = testing::default_mock();
            AgentEnv env{mock, templates(), {}, nullptr};
            const auto cfg = config(kind, 3, 3, 99);
            auto out = run_workflow(build_context(corpus(), "Ratios", DifficultyLevel::Easy, cfg), cfg, env);
            std::string raw;
            for (const auto& m : out.transcript.messages()) raw += m.raw + "|";
            return std::make_pair(raw, out.final_pair);
        };
        CHECK(once() == once());
    }
}

TEST_CASE("rule consensus examples") {
    SUBCASE("final round all agree on candidate 2") {
        Transcript t;
        t.append(versatile(1, 1, fresh(1)));
        t.append(versatile(2, 1, revise(1, 2)));
        t.append(versatile(1, 2, agree(2)));
        t.append(versatile(2, 2, agree(2)));
        std::vector<Candidate> c = {{{"Q1", "A", {}}, {AgentRole::Versatile, 1}, 0, {}},
                                    {{"Q2", "A", {}}, {AgentRole::Versatile, 2}, 1, 1}};
        const auto r = detect_rule_consensus(t, c);
        CHECK(r.reached);
        CHECK(r.candidate == 2);
    }
    SUBCASE("one revise in the final round") {
        Transcript t;
        t.append(versatile(1, 1, fresh(1)));
        t.append(versatile(2, 1, agree(1)));
        t.append(versatile(1, 2, agree(1)));
        t.append(versatile(2, 2, revise(1, 2)));
        std::vector<Candidate> c = {{{"Q1", "A", {}}, {AgentRole::Versatile, 1}, 0, {}},
                                    {{"Q2", "A", {}}, {AgentRole::Versatile, 2}, 3, 1}};
        const auto r = detect_rule_consensus(t, c);
        CHECK_FALSE(r.reached);
        CHECK_FALSE(r.candidate.has_value());
    }
    SUBCASE("two agents, the non-author agrees on candidate 1") {
        Transcript t;
        t.append(versatile(1, 1, fresh(1)));
        t.append(versatile(2, 1, agree(1)));
        t.append(versatile(1, 2, agree(1)));
        t.append(versatile(2, 2, agree(1)));
        std::vector<Candidate> c = {{{"Q1", "A", {}}, {AgentRole::Versatile, 1}, 0, {}}};
        const auto r = detect_rule_consensus(t, c);
        CHECK(r.reached);
        CHECK(r.candidate == 1);
    }
}

TEST_CASE("expected lengths") {
    CHECK(expected_transcript_length(config(WorkflowKind::BaselineZS)) == 1);
    CHECK(expected_transcript_length(config(WorkflowKind::BaselineFS)) == 1);
    CHECK(expected_transcript_length(config(WorkflowKind::TCC, 4)) == 9);
    CHECK(expected_transcript_length(config(WorkflowKind::CC, 5, 4)) == 21);
}
