#include "mathgen/workflows.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "mathgen/error.hpp"

namespace mathgen {

std::string_view to_string(WorkflowKind kind) {
    switch (kind) {
        case WorkflowKind::BaselineZS: return "baseline_zs";
        case WorkflowKind::BaselineFS: return "baseline_fs";
        case WorkflowKind::TCC: return "tcc";
        case WorkflowKind::CC: return "cc";
    }
    return "unknown";
}

WorkflowKind parse_workflow_kind(std::string_view text) {
    std::string t;
    for (char c : text) {
        if (c == '-' || c == ' ') c = '_';
        t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (t == "baseline_zs" || t == "zs") return WorkflowKind::BaselineZS;
    if (t == "baseline_fs" || t == "fs") return WorkflowKind::BaselineFS;
    if (t == "tcc") return WorkflowKind::TCC;
    if (t == "cc") return WorkflowKind::CC;
    throw ConfigError("unknown workflow '" + std::string(text) + "'");
}

void WorkflowConfig::validate() const {
    if (autocot && solution_generation) {
        throw ConfigError("autocot and solution_generation cannot both be enabled");
    }
    if (kind == WorkflowKind::TCC || kind == WorkflowKind::CC) {
        if (rounds < kMinRounds || rounds > kMaxRounds) {
            throw ConfigError("rounds must be in [2, 5], got " + std::to_string(rounds));
        }
    }
    if (kind == WorkflowKind::CC && (n_agents < kMinAgents || n_agents > kMaxAgents)) {
        throw ConfigError("n_agents must be in [2, 4], got " + std::to_string(n_agents));
    }
    if (kind != WorkflowKind::BaselineZS && k == 0) throw ConfigError("k must be at least 1");
}

std::size_t expected_transcript_length(const WorkflowConfig& cfg) {
    switch (cfg.kind) {
        case WorkflowKind::BaselineZS:
        case WorkflowKind::BaselineFS: return 1;
        case WorkflowKind::TCC: return 1 + 2 * static_cast<std::size_t>(cfg.rounds);
        case WorkflowKind::CC:
            return static_cast<std::size_t>(cfg.n_agents) * static_cast<std::size_t>(cfg.rounds) + 1;
    }
    return 0;
}

GenerationContext build_context(const Corpus& corpus, const std::string& kc,
                                DifficultyLevel difficulty, const WorkflowConfig& cfg) {
    GenerationContext ctx;
    ctx.kc = kc;
    ctx.difficulty = difficulty;
    ctx.autocot = cfg.autocot;
    ctx.solution_generation = cfg.solution_generation;
    if (cfg.kind != WorkflowKind::BaselineZS) {
        Rng rng(derive_seed(cfg.run_seed, "examples"));
        ctx.examples = sample_examples(corpus, kc, difficulty, cfg.strategy, cfg.k, rng);
    }
    return ctx;
}

namespace {

TurnSpec generator_turn(const AgentEnv& env, Speaker speaker, int round, const DecodingParams& p,
                        std::string format) {
    return {speaker, round, env.models.generator, p.temperature, p.seed, std::move(format)};
}

GenerationOutcome run_single_teacher(const GenerationContext& ctx, const WorkflowConfig& cfg,
                                     const AgentEnv& env) {
    Rng params_rng(derive_seed(cfg.run_seed, "decoding"));
    const auto params = draw_decoding_params(params_rng);
    const Speaker teacher{AgentRole::Teacher, 1};
    auto turn = ask(env, generator_turn(env, teacher, 0, params, qa_format(ctx.autocot)),
                    render_teacher_prompt(env.templates, ctx),
                    [&](std::string_view t) { return parse_qa(t, ctx.autocot); });

    GenerationOutcome out;
    TranscriptMessage msg;
    msg.speaker = teacher;
    msg.pair = turn.value;
    msg.raw = std::move(turn.raw);
    msg.params = params;
    msg.attempts = turn.attempts;
    out.transcript.append(std::move(msg));
    out.candidates.push_back({turn.value, teacher, 0, std::nullopt});
    out.final_pair = turn.value;
    out.final_index = 0;
    return out;
}

}  // namespace

GenerationOutcome run_baseline_zs(const GenerationContext& ctx, const WorkflowConfig& cfg,
                                  const AgentEnv& env) {
    cfg.validate();
    auto zero_shot = ctx;
    zero_shot.examples.clear();
    return run_single_teacher(zero_shot, cfg, env);
}

GenerationOutcome run_baseline_fs(const GenerationContext& ctx, const WorkflowConfig& cfg,
                                  const AgentEnv& env) {
    cfg.validate();
    if (ctx.examples.empty()) throw ConfigError("few-shot baseline needs at least one example");
    return run_single_teacher(ctx, cfg, env);
}

GenerationOutcome run_tcc(const GenerationContext& ctx, const WorkflowConfig& cfg,
                          const AgentEnv& env) {
    if (cfg.kind != WorkflowKind::TCC) throw ConfigError("run_tcc needs a TCC config");
    cfg.validate();
    Rng params_rng(derive_seed(cfg.run_seed, "decoding"));
    const auto teacher_params = draw_decoding_params(params_rng);
    const auto critic_params = draw_decoding_params(params_rng);
    const Speaker teacher{AgentRole::Teacher, 1};
    const Speaker critic{AgentRole::Critic, 1};

    GenerationOutcome out;
    auto teacher_turn = [&](int round) {
        const Transcript* history = out.transcript.empty() ? nullptr : &out.transcript;
        auto turn = ask(env, generator_turn(env, teacher, round, teacher_params, qa_format(ctx.autocot)),
                        render_teacher_prompt(env.templates, ctx, history),
                        [&](std::string_view t) { return parse_qa(t, ctx.autocot); });
        TranscriptMessage msg;
        msg.speaker = teacher;
        msg.round = round;
        msg.pair = turn.value;
        msg.raw = std::move(turn.raw);
        msg.params = teacher_params;
        msg.attempts = turn.attempts;
        std::optional<int> revises;
        if (!out.candidates.empty()) revises = static_cast<int>(out.candidates.size());
        out.candidates.push_back({turn.value, teacher, out.transcript.size(), revises});
        out.transcript.append(std::move(msg));
    };

    teacher_turn(0);
    for (int round = 1; round <= cfg.rounds; ++round) {
        const auto& current = out.candidates.back().pair;
        auto turn = ask(env, generator_turn(env, critic, round, critic_params, "FEEDBACK: <your feedback>"),
                        render_critic_prompt(env.templates, current, ctx, out.transcript),
                        [](std::string_view t) { return parse_feedback(t); });
        TranscriptMessage msg;
        msg.speaker = critic;
        msg.round = round;
        msg.feedback = turn.value;
        msg.raw = std::move(turn.raw);
        msg.params = critic_params;
        msg.attempts = turn.attempts;
        out.transcript.append(std::move(msg));
        teacher_turn(round);
    }
    out.final_index = out.candidates.size() - 1;
    out.final_pair = out.candidates.back().pair;
    return out;
}

GenerationOutcome run_cc(const GenerationContext& ctx, const WorkflowConfig& cfg,
                         const AgentEnv& env) {
    if (cfg.kind != WorkflowKind::CC) throw ConfigError("run_cc needs a CC config");
    cfg.validate();
    Rng params_rng(derive_seed(cfg.run_seed, "decoding"));
    std::vector<DecodingParams> params;
    for (int a = 0; a < cfg.n_agents; ++a) params.push_back(draw_decoding_params(params_rng));

    GenerationOutcome out;
    for (int round = 1; round <= cfg.rounds; ++round) {
        for (int agent = 1; agent <= cfg.n_agents; ++agent) {
            const Speaker speaker{AgentRole::Versatile, agent};
            const auto n = out.candidates.size();
            auto turn = ask(env,
                            generator_turn(env, speaker, round, params[agent - 1],
                                           decision_format(n > 0, ctx.autocot)),
                            render_versatile_prompt(env.templates, ctx, out.transcript,
                                                    out.candidates, agent),
                            [&](std::string_view t) { return parse_decision(t, n, ctx.autocot); });
            const auto& d = turn.value;
            if (d.kind != DecisionKind::Agree) {
                std::optional<int> revises;
                if (d.kind == DecisionKind::Revise) revises = d.target;
                out.candidates.push_back({*d.pair, speaker, out.transcript.size(), revises});
            }
            TranscriptMessage msg;
            msg.speaker = speaker;
            msg.round = round;
            msg.decision = d;
            msg.raw = std::move(turn.raw);
            msg.params = params[agent - 1];
            msg.attempts = turn.attempts;
            out.transcript.append(std::move(msg));
        }
    }

    const Speaker ceo{AgentRole::Ceo, 1};
    const auto n = out.candidates.size();
    auto verdict = ask(env,
                       TurnSpec{ceo, 0, env.models.judge, 0.0, std::nullopt,
                                "CONSENSUS: yes|no\nCHOICE: <candidate number>\nRATIONALE: <optional>"},
                       render_ceo_prompt(env.templates, ctx, out.transcript, out.candidates),
                       [&](std::string_view t) { return parse_ceo(t, n); });
    TranscriptMessage msg;
    msg.speaker = ceo;
    msg.verdict = verdict.value;
    msg.raw = std::move(verdict.raw);
    msg.attempts = verdict.attempts;

    const auto rule = detect_rule_consensus(out.transcript, out.candidates);
    out.transcript.append(std::move(msg));
    out.final_index = static_cast<std::size_t>(verdict.value.choice - 1);
    out.final_pair = out.candidates[out.final_index].pair;
    out.consensus_reported = verdict.value.consensus;
    out.rule_consensus = rule.reached;
    out.rule_consensus_candidate = rule.candidate;
    return out;
}

GenerationOutcome run_workflow(const GenerationContext& ctx, const WorkflowConfig& cfg,
                               const AgentEnv& env) {
    switch (cfg.kind) {
        case WorkflowKind::BaselineZS: return run_baseline_zs(ctx, cfg, env);
        case WorkflowKind::BaselineFS: return run_baseline_fs(ctx, cfg, env);
        case WorkflowKind::TCC: return run_tcc(ctx, cfg, env);
        case WorkflowKind::CC: return run_cc(ctx, cfg, env);
    }
    throw ConfigError("unknown workflow kind");
}

RuleConsensus detect_rule_consensus(const Transcript& transcript,
                                    const std::vector<Candidate>& candidates) {
    if (candidates.empty()) return {};
    int last_round = 0;
    for (const auto& m : transcript.messages()) {
        if (m.speaker.role == AgentRole::Versatile) last_round = std::max(last_round, m.round);
    }
    if (last_round == 0) return {};

    const int latest = static_cast<int>(candidates.size());
    const auto author = candidates.back().author.agent;
    std::map<int, bool> agreed;  // agent -> agreed with latest in the last round
    for (const auto& m : transcript.messages()) {
        if (m.speaker.role != AgentRole::Versatile || m.round != last_round) continue;
        auto& ok = agreed.try_emplace(m.speaker.agent, true).first->second;
        const bool agrees = m.decision && m.decision->kind == DecisionKind::Agree &&
                            m.decision->target == latest;
        ok = ok && agrees;
    }
    bool any_other = false;
    for (const auto& [agent, ok] : agreed) {
        if (agent == author) continue;
        any_other = true;
        if (!ok) return {};
    }
    if (!any_other) return {};
    return {true, latest};
}

}  // namespace mathgen
