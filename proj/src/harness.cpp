#include "mathgen/harness.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iterator>
#include <mutex>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "mathgen/curation.hpp"
#include "mathgen/error.hpp"

namespace mathgen {

std::vector<Cell> enumerate_cells(const ExperimentPlan& plan) {
    plan.validate();
    std::vector<Cell> cells;
    for (auto workflow : plan.methods) {
        const bool baseline =
            workflow == WorkflowKind::BaselineZS || workflow == WorkflowKind::BaselineFS;
        std::vector<CurationMode> curations =
            baseline ? std::vector<CurationMode>{CurationMode::None} : plan.curation;
        std::vector<std::optional<int>> rounds{std::nullopt};
        std::vector<std::optional<int>> agents{std::nullopt};
        if (!baseline) rounds.assign(plan.rounds.begin(), plan.rounds.end());
        if (workflow == WorkflowKind::CC) agents.assign(plan.agents.begin(), plan.agents.end());
        std::vector<std::optional<std::string>> kcs{std::nullopt};
        if (!plan.kcs.empty()) kcs.assign(plan.kcs.begin(), plan.kcs.end());

        for (auto curation : curations)
            for (auto difficulty : plan.difficulties)
                for (auto strategy : plan.strategies)
                    for (auto mode : plan.modes)
                        for (const auto& r : rounds)
                            for (const auto& a : agents)
                                for (const auto& kc : kcs)
                                    for (int rep = 0; rep < plan.repetitions; ++rep) {
                                        cells.push_back({workflow, curation, difficulty, strategy,
                                                         mode, r, a, kc, rep});
                                    }
    }
    return cells;
}

RunRecord plan_record(const Cell& cell, const RunSettings& settings, const Corpus& corpus,
                      const std::string& backend_name) {
    const auto& plan = settings.plan;
    RunRecord r;
    r.method = method_label(cell.workflow, cell.curation);
    r.workflow = cell.workflow;
    r.curation = cell.curation;
    r.rounds = cell.rounds;
    r.n_agents = cell.n_agents;
    if (cell.rounds && cell.n_agents) r.agent_rounds = *cell.rounds * *cell.n_agents;
    r.strategy = cell.strategy;
    r.autocot = cell.mode == GenerationMode::AutoCoT;
    r.solution_generation = cell.mode == GenerationMode::Solution;
    r.k = plan.k;
    r.pool_size = cell.curation == CurationMode::None ? 1 : plan.pool_size;
    r.plan_seed = plan.seed;
    r.generator_model = settings.models.generator;
    r.judge_model = settings.models.judge;
    r.judge_mode = settings.judge_mode == JudgeMode::Combined ? "combined" : "per_metric";
    r.backend = backend_name;
    r.difficulty = cell.difficulty;
    r.repetition = cell.repetition;
    if (cell.kc) {
        if (!corpus.has_kc(*cell.kc)) throw ConfigError("plan names unknown KC '" + *cell.kc + "'");
        r.kc = *cell.kc;
    } else {
        const auto names = corpus.kc_names();
        if (names.empty()) throw CorpusError("corpus is empty");
        r.kc = names[fnv1a64(r.fingerprint().dump()) % names.size()];
    }
    r.run_id = fingerprint_hash(r.fingerprint());
    r.run_seed = std::stoull(r.run_id, nullptr, 16);
    return r;
}

namespace {

nlohmann::json pair_json(const QAPair& p) {
    nlohmann::json j{{"question", p.question}, {"answer", p.answer}};
    j["reasoning"] = p.reasoning ? nlohmann::json(*p.reasoning) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json message_json(const TranscriptMessage& m) {
    nlohmann::json j;
    j["speaker"] = {{"role", to_string(m.speaker.role)}, {"agent", m.speaker.agent}};
    j["round"] = m.round;
    if (m.decision) {
        const auto& d = *m.decision;
        nlohmann::json dj{{"kind", to_string(d.kind)}};
        if (d.target) dj["target"] = *d.target;
        if (d.pair) dj["pair"] = pair_json(*d.pair);
        if (d.feedback) dj["feedback"] = *d.feedback;
        j["decision"] = dj;
    }
    if (m.pair) j["pair"] = pair_json(*m.pair);
    if (m.feedback) j["feedback"] = *m.feedback;
    if (m.verdict) {
        j["verdict"] = {{"consensus", m.verdict->consensus}, {"choice", m.verdict->choice}};
        if (m.verdict->rationale) j["verdict"]["rationale"] = *m.verdict->rationale;
    }
    j["raw"] = m.raw;
    j["temperature"] = m.params.temperature;
    j["seed"] = m.params.seed;
    j["attempts"] = m.attempts;
    return j;
}

nlohmann::json call_json(const CallRecord& c) {
    nlohmann::json j;
    j["speaker"] = {{"role", to_string(c.speaker.role)}, {"agent", c.speaker.agent}};
    j["round"] = c.round;
    j["request"] = to_wire(c.request);
    j["response"] = c.response;
    j["http_attempts"] = c.attempts;
    auto& backoff = j["backoff_ms"] = nlohmann::json::array();
    for (auto b : c.backoff) backoff.push_back(b.count());
    j["usage"] = {{"prompt_tokens", c.usage.prompt_tokens},
                  {"completion_tokens", c.usage.completion_tokens}};
    if (c.parse_error) j["parse_error"] = *c.parse_error;
    return j;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

CellOutput run_cell(const Cell& cell, const RunSettings& settings, const Corpus& corpus,
                    ChatBackend& backend, const TemplateSet& templates) {
    const auto started = std::chrono::steady_clock::now();
    CellOutput out;
    auto& record = out.record = plan_record(cell, settings, corpus, backend.name());
    record.started_at = utc_now();

    CallLog log;
    AgentEnv env{backend, templates, settings.models, &log};

    struct Generation {
        GenerationContext ctx;
        GenerationOutcome outcome;
        std::uint64_t seed;
    };
    std::vector<Generation> gens;
    auto& tjson = out.transcripts;
    tjson["run_id"] = record.run_id;
    tjson["generations"] = nlohmann::json::array();
    for (std::size_t g = 0; g < record.pool_size; ++g) {
        WorkflowConfig wcfg;
        wcfg.kind = cell.workflow;
        wcfg.rounds = cell.rounds.value_or(kMinRounds);
        wcfg.n_agents = cell.n_agents.value_or(kMinAgents);
        wcfg.autocot = record.autocot;
        wcfg.solution_generation = record.solution_generation;
        wcfg.strategy = cell.strategy;
        wcfg.k = record.k;
        wcfg.run_seed = derive_seed(record.run_seed, g);
        auto ctx = build_context(corpus, record.kc, cell.difficulty, wcfg);
        auto outcome = run_workflow(ctx, wcfg, env);

        nlohmann::json gj{{"generation", g}, {"seed", wcfg.run_seed}};
        auto& msgs = gj["transcript"] = nlohmann::json::array();
        for (const auto& m : outcome.transcript.messages()) msgs.push_back(message_json(m));
        gj["final_index"] = outcome.final_index;
        tjson["generations"].push_back(std::move(gj));

        CandidateRecord cr;
        cr.pair = outcome.final_pair;
        cr.generation_seed = wcfg.run_seed;
        cr.transcript_length = outcome.transcript.size();
        cr.consensus_reported = outcome.consensus_reported;
        cr.rule_consensus = outcome.rule_consensus;
        record.candidates.push_back(std::move(cr));
        gens.push_back({std::move(ctx), std::move(outcome), wcfg.run_seed});
    }

    switch (cell.curation) {
        case CurationMode::None:
            record.chosen_index = 0;
            break;
        case CurationMode::Bloom: {
            std::vector<BloomScore> scores;
            for (std::size_t g = 0; g < gens.size(); ++g) {
                scores.push_back(bloom_score(gens[g].outcome.final_pair, gens[g].ctx, env));
                record.candidates[g].bloom_score = scores.back().value();
            }
            const auto choice = curate_bloom(scores, cell.difficulty);
            record.chosen_index = choice.index;
            record.band_miss = choice.band_miss;
            break;
        }
        case CurationMode::Random: {
            Rng rng(derive_seed(record.run_seed, "curation"));
            record.chosen_index = curate_random(gens.size(), rng);
            break;
        }
    }
    const auto& chosen = gens[record.chosen_index];
    record.chosen = chosen.outcome.final_pair;

    auto eval_ctx = chosen.ctx;
    if (eval_ctx.examples.empty()) {
        Rng rng(derive_seed(record.run_seed, "evaluation-examples"));
        eval_ctx.examples =
            sample_examples(corpus, record.kc, cell.difficulty, cell.strategy, record.k, rng);
    }
    record.scores = evaluate(record.chosen, eval_ctx, env, settings.judge_mode);

    record.usage = log.usage();
    record.calls = log.size();
    auto& calls = tjson["calls"] = nlohmann::json::array();
    for (const auto& c : log.records()) calls.push_back(call_json(c));
    record.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                               started)
                         .count();
    return out;
}

ExperimentSummary run_experiment(const RunSettings& settings, const Corpus& corpus,
                                 ChatBackend& backend, const std::filesystem::path& out_dir,
                                 const TemplateSet& templates) {
    if (!corpus.tiers_assigned()) throw CorpusError("corpus difficulty tiers are not assigned");
    const auto cells = enumerate_cells(settings.plan);
    std::filesystem::create_directories(out_dir);
    const auto runs_path = out_dir / "runs.jsonl";

    std::set<std::string> done;
    if (std::filesystem::exists(runs_path)) {
        // An interrupted writer can leave a partial last line; drop it so the cell reruns.
        std::string text;
        {
            std::ifstream in(runs_path, std::ios::binary);
            text.assign(std::istreambuf_iterator<char>(in), {});
        }
        if (!text.empty() && text.back() != '\n') {
            const auto keep = text.rfind('\n') == std::string::npos ? 0 : text.rfind('\n') + 1;
            spdlog::warn("{}: dropping incomplete last line", runs_path.string());
            std::filesystem::resize_file(runs_path, keep);
        }
        for (const auto& r : read_records(runs_path)) done.insert(r.run_id);
    }

    ExperimentSummary summary;
    summary.planned = cells.size();

    struct Slot {
        bool finished = false;
        std::optional<CellOutput> output;
        std::optional<nlohmann::json> error;
    };
    std::vector<Slot> slots(cells.size());
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto id = plan_record(cells[i], settings, corpus, backend.name()).run_id;
        if (done.contains(id)) {
            slots[i].finished = true;
            ++summary.skipped;
        } else {
            done.insert(id);  // duplicate cells run once
            todo.push_back(i);
        }
    }

    std::ofstream runs(runs_path, std::ios::app);
    std::ofstream transcripts(out_dir / "transcripts.jsonl", std::ios::app);
    std::ofstream errors(out_dir / "errors.jsonl", std::ios::app);
    if (!runs || !transcripts || !errors) {
        throw ConfigError("cannot write run outputs under " + out_dir.string());
    }

    std::mutex mu;
    std::size_t next_to_write = 0;
    // Writes every finished slot at the front of the plan, in plan order.
    auto flush_ready = [&] {
        while (next_to_write < slots.size() && slots[next_to_write].finished) {
            auto& slot = slots[next_to_write];
            if (slot.output) {
                runs << slot.output->record.to_json().dump() << '\n';
                transcripts << slot.output->transcripts.dump() << '\n';
                ++summary.completed;
            } else if (slot.error) {
                errors << slot.error->dump() << '\n';
                ++summary.failed;
            }
            slot.output.reset();
            ++next_to_write;
        }
        runs.flush();
        transcripts.flush();
        errors.flush();
    };

    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (;;) {
            const auto t = cursor.fetch_add(1);
            if (t >= todo.size()) return;
            const auto i = todo[t];
            Slot result;
            result.finished = true;
            try {
                result.output = run_cell(cells[i], settings, corpus, backend, templates);
            } catch (const std::exception& e) {
                const auto planned = plan_record(cells[i], settings, corpus, backend.name());
                spdlog::error("cell {} ({}) failed: {}", planned.run_id, planned.method, e.what());
                result.error = nlohmann::json{{"run_id", planned.run_id},
                                              {"fingerprint", planned.fingerprint()},
                                              {"error", e.what()}};
            }
            std::lock_guard lock(mu);
            slots[i] = std::move(result);
            flush_ready();
        }
    };

    {
        std::lock_guard lock(mu);
        flush_ready();
    }
    const auto n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(1, settings.concurrency)), todo.size());
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    pool.clear();
    return summary;
}

}  // namespace mathgen
