#include "mathgen/records.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <openssl/evp.h>

#include "mathgen/error.hpp"

namespace mathgen {

std::string_view to_string(CurationMode mode) {
    switch (mode) {
        case CurationMode::None: return "none";
        case CurationMode::Bloom: return "bloom";
        case CurationMode::Random: return "random";
    }
    return "unknown";
}

CurationMode parse_curation(std::string_view text) {
    std::string t;
    for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "none") return CurationMode::None;
    if (t == "bloom") return CurationMode::Bloom;
    if (t == "random" || t == "rc") return CurationMode::Random;
    throw ConfigError("unknown curation mode '" + std::string(text) + "'");
}

std::string method_label(WorkflowKind kind, CurationMode curation) {
    std::string base;
    switch (kind) {
        case WorkflowKind::BaselineZS: return "Baseline_ZS";
        case WorkflowKind::BaselineFS: return "Baseline_FS";
        case WorkflowKind::TCC: base = "TCC"; break;
        case WorkflowKind::CC: base = "CC"; break;
    }
    if (curation == CurationMode::Random) return base + "_RC";
    if (curation == CurationMode::None) return base + "_NC";
    return base;
}

namespace {

template <typename T>
nlohmann::json opt(const std::optional<T>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

nlohmann::json pair_json(const QAPair& p) {
    nlohmann::json j{{"question", p.question}, {"answer", p.answer}};
    j["reasoning"] = opt(p.reasoning);
    return j;
}

QAPair pair_from(const nlohmann::json& j) {
    return {j.at("question").get<std::string>(), j.at("answer").get<std::string>(),
            get_opt<std::string>(j, "reasoning")};
}

std::string mode_name(bool autocot, bool solution) {
    return autocot ? "autocot" : solution ? "solution" : "plain";
}

}  // namespace

nlohmann::json RunRecord::fingerprint() const {
    return {
        {"method", method},
        {"workflow", to_string(workflow)},
        {"curation", to_string(curation)},
        {"rounds", opt(rounds)},
        {"n_agents", opt(n_agents)},
        {"agent_rounds", opt(agent_rounds)},
        {"strategy", to_string(strategy)},
        {"autocot", autocot},
        {"solution_generation", solution_generation},
        {"k", k},
        {"pool_size", pool_size},
        {"plan_seed", plan_seed},
        {"generator_model", generator_model},
        {"judge_model", judge_model},
        {"judge_mode", judge_mode},
        {"backend", backend},
        {"kc", kc},
        {"difficulty", to_string(difficulty)},
        {"repetition", repetition},
    };
}

nlohmann::json RunRecord::to_json() const {
    nlohmann::json j;
    j["run_id"] = run_id;
    j["fingerprint"] = fingerprint();
    j["run_seed"] = run_seed;
    auto& cands = j["candidates"] = nlohmann::json::array();
    for (const auto& c : candidates) {
        cands.push_back({{"pair", pair_json(c.pair)},
                         {"bloom_score", opt(c.bloom_score)},
                         {"generation_seed", c.generation_seed},
                         {"transcript_length", c.transcript_length},
                         {"consensus_reported", opt(c.consensus_reported)},
                         {"rule_consensus", opt(c.rule_consensus)}});
    }
    j["chosen"] = {{"index", chosen_index}, {"band_miss", band_miss}, {"pair", pair_json(chosen)}};
    nlohmann::json scores_json;
    for (auto m : kMetrics) scores_json[std::string(to_string(m))] = scores[m];
    scores_json["avg_score"] = scores.avg_score;
    j["scores"] = scores_json;
    j["usage"] = {{"prompt_tokens", usage.prompt_tokens},
                  {"completion_tokens", usage.completion_tokens},
                  {"calls", calls}};
    j["timing"] = {{"started_at", started_at}, {"wall_ms", wall_ms}};
    return j;
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    const auto& f = j.at("fingerprint");
    r.method = f.at("method").get<std::string>();
    r.workflow = parse_workflow_kind(f.at("workflow").get<std::string>());
    r.curation = parse_curation(f.at("curation").get<std::string>());
    r.rounds = get_opt<int>(f, "rounds");
    r.n_agents = get_opt<int>(f, "n_agents");
    r.agent_rounds = get_opt<int>(f, "agent_rounds");
    r.strategy = parse_strategy(f.at("strategy").get<std::string>());
    r.autocot = f.value("autocot", false);
    r.solution_generation = f.value("solution_generation", false);
    r.k = f.value("k", std::size_t{3});
    r.pool_size = f.value("pool_size", std::size_t{1});
    r.plan_seed = f.value("plan_seed", std::uint64_t{0});
    r.generator_model = f.value("generator_model", "");
    r.judge_model = f.value("judge_model", "");
    r.judge_mode = f.value("judge_mode", "per_metric");
    r.backend = f.value("backend", "");
    r.kc = f.value("kc", "");
    r.difficulty = parse_difficulty(f.at("difficulty").get<std::string>());
    r.repetition = f.value("repetition", 0);
    r.run_seed = j.value("run_seed", std::uint64_t{0});

    if (j.contains("candidates")) {
        for (const auto& c : j.at("candidates")) {
            CandidateRecord cr;
            cr.pair = pair_from(c.at("pair"));
            cr.bloom_score = get_opt<int>(c, "bloom_score");
            cr.generation_seed = c.value("generation_seed", std::uint64_t{0});
            cr.transcript_length = c.value("transcript_length", std::size_t{0});
            cr.consensus_reported = get_opt<bool>(c, "consensus_reported");
            cr.rule_consensus = get_opt<bool>(c, "rule_consensus");
            r.candidates.push_back(std::move(cr));
        }
    }
    if (j.contains("chosen")) {
        const auto& c = j.at("chosen");
        r.chosen_index = c.value("index", std::size_t{0});
        r.band_miss = c.value("band_miss", false);
        r.chosen = pair_from(c.at("pair"));
    }
    const auto& s = j.at("scores");
    std::array<int, 5> values{};
    for (auto m : kMetrics) values[index_of(m)] = s.at(std::string(to_string(m))).get<int>();
    r.scores = EvalScores::from(values);
    if (j.contains("usage")) {
        const auto& u = j.at("usage");
        r.usage.prompt_tokens = u.value("prompt_tokens", std::int64_t{0});
        r.usage.completion_tokens = u.value("completion_tokens", std::int64_t{0});
        r.calls = u.value("calls", std::size_t{0});
    }
    if (j.contains("timing")) {
        r.started_at = j.at("timing").value("started_at", "");
        r.wall_ms = j.at("timing").value("wall_ms", 0.0);
    }
    return r;
}

std::string RunRecord::field(std::string_view name) const {
    auto num = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
    if (name == "method") return method;
    if (name == "workflow") return std::string(to_string(workflow));
    if (name == "curation") return std::string(to_string(curation));
    if (name == "strategy") return std::string(to_string(strategy));
    if (name == "difficulty") return std::string(to_string(difficulty));
    if (name == "kc") return kc;
    if (name == "rounds") return num(rounds);
    if (name == "n_agents") return num(n_agents);
    if (name == "agent_rounds") return num(agent_rounds);
    if (name == "mode") return mode_name(autocot, solution_generation);
    throw ConfigError("unknown grouping field '" + std::string(name) + "'");
}

std::string fingerprint_hash(const nlohmann::json& fingerprint) {
    const auto text = fingerprint.dump();
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < 8; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::vector<RunRecord> read_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open records file '" + path.string() + "'");
    std::vector<RunRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(RunRecord::from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

nlohmann::json without_timing(nlohmann::json record) {
    record.erase("timing");
    return record;
}

std::vector<SummaryRow> aggregate(std::span<const RunRecord> records,
                                  const std::vector<std::string>& group_by) {
    struct Acc {
        std::size_t count = 0;
        std::array<std::int64_t, 5> sums{};
    };
    auto less = [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                            [](const std::string& x, const std::string& y) {
                                                return problem_id_less(x, y);
                                            });
    };
    std::map<std::vector<std::string>, Acc, decltype(less)> groups(less);
    for (const auto& r : records) {
        std::vector<std::string> key;
        key.reserve(group_by.size());
        for (const auto& g : group_by) key.push_back(r.field(g));
        auto& acc = groups[key];
        ++acc.count;
        for (std::size_t i = 0; i < 5; ++i) acc.sums[i] += r.scores.values[i];
    }
    std::vector<SummaryRow> rows;
    for (const auto& [key, acc] : groups) {
        SummaryRow row;
        row.key = key;
        row.count = acc.count;
        std::int64_t total = 0;
        for (std::size_t i = 0; i < 5; ++i) {
            row.means[i] = static_cast<double>(acc.sums[i]) / static_cast<double>(acc.count);
            total += acc.sums[i];
        }
        row.avg_score = static_cast<double>(total) / static_cast<double>(5 * acc.count);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string render_2dp(double value) {
    const double scaled = value * 100.0;
    const auto cents = static_cast<long long>(std::llround(scaled + std::copysign(1e-7, scaled)));
    const auto mag = cents < 0 ? -cents : cents;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%lld.%02lld", cents < 0 ? "-" : "", mag / 100, mag % 100);
    return buf;
}

std::array<std::size_t, 5> score_histogram(std::span<const RunRecord> records, Metric metric) {
    std::array<std::size_t, 5> bins{};
    for (const auto& r : records) {
        const int v = r.scores[metric];
        if (v >= 1 && v <= 5) ++bins[static_cast<std::size_t>(v - 1)];
    }
    return bins;
}

}  // namespace mathgen
