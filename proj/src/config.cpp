#include "mathgen/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "mathgen/error.hpp"

namespace mathgen {

std::string_view to_string(GenerationMode mode) {
    switch (mode) {
        case GenerationMode::Plain: return "plain";
        case GenerationMode::AutoCoT: return "autocot";
        case GenerationMode::Solution: return "solution";
    }
    return "unknown";
}

GenerationMode parse_generation_mode(std::string_view text) {
    std::string t;
    for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "plain" || t == "none") return GenerationMode::Plain;
    if (t == "autocot") return GenerationMode::AutoCoT;
    if (t == "solution" || t == "solution_generation") return GenerationMode::Solution;
    throw ConfigError("unknown generation mode '" + std::string(text) + "'");
}

void ExperimentPlan::validate() const {
    auto nonempty = [](bool empty, const char* axis) {
        if (empty) throw ConfigError(std::string("plan axis '") + axis + "' is empty");
    };
    nonempty(methods.empty(), "methods");
    nonempty(difficulties.empty(), "difficulties");
    nonempty(strategies.empty(), "strategies");
    nonempty(modes.empty(), "modes");
    const bool agentic = std::any_of(methods.begin(), methods.end(), [](WorkflowKind k) {
        return k == WorkflowKind::TCC || k == WorkflowKind::CC;
    });
    if (agentic) {
        nonempty(rounds.empty(), "rounds");
        nonempty(curation.empty(), "curation");
        for (auto c : curation) {
            if (c == CurationMode::None) {
                throw ConfigError("agentic methods need curation 'bloom' or 'random'");
            }
        }
    }
    if (std::find(methods.begin(), methods.end(), WorkflowKind::CC) != methods.end()) {
        nonempty(agents.empty(), "agents");
    }
    if (!allow_out_of_range) {
        for (int r : rounds) {
            if (r < kMinRounds || r > kMaxRounds) {
                throw ConfigError("rounds value " + std::to_string(r) + " outside [2, 5]");
            }
        }
        for (int a : agents) {
            if (a < kMinAgents || a > kMaxAgents) {
                throw ConfigError("agents value " + std::to_string(a) + " outside [2, 4]");
            }
        }
    }
    if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
    if (pool_size < 1) throw ConfigError("pool_size must be at least 1");
    if (k < 1) throw ConfigError("k must be at least 1");
}

namespace {

// Accepts a scalar, a sequence, or a "lo-hi" integer range.
std::vector<std::string> scalars(const YAML::Node& node) {
    std::vector<std::string> out;
    if (node.IsSequence()) {
        for (const auto& item : node) out.push_back(item.as<std::string>());
    } else if (node.IsScalar()) {
        std::stringstream ss(node.as<std::string>());
        std::string part;
        while (std::getline(ss, part, ',')) {
            part.erase(0, part.find_first_not_of(" \t"));
            part.erase(part.find_last_not_of(" \t") + 1);
            if (!part.empty()) out.push_back(part);
        }
    } else if (!node.IsNull()) {
        throw ConfigError("expected a list");
    }
    return out;
}

std::vector<int> int_list(const YAML::Node& node) {
    std::vector<int> out;
    for (const auto& s : scalars(node)) {
        const auto dash = s.find('-', 1);
        try {
            if (dash != std::string::npos) {
                const int lo = std::stoi(s.substr(0, dash));
                const int hi = std::stoi(s.substr(dash + 1));
                if (lo > hi) throw ConfigError("empty range '" + s + "'");
                for (int v = lo; v <= hi; ++v) out.push_back(v);
            } else {
                out.push_back(std::stoi(s));
            }
        } catch (const std::logic_error&) {
            throw ConfigError("'" + s + "' is not an integer or range");
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

template <typename T, typename Parse>
std::vector<T> enum_list(const YAML::Node& node, Parse parse) {
    std::vector<T> out;
    for (const auto& s : scalars(node)) {
        auto v = parse(s);
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    }
    return out;
}

void read_into(const YAML::Node& root, RunSettings& cfg) {
    static const std::set<std::string> known = {
        "methods", "difficulties", "strategies", "rounds", "agents", "curation", "modes", "kcs",
        "repetitions", "pool_size", "k", "seed", "allow_out_of_range", "concurrency",
        "templates_dir", "generator", "judge", "backend", "retry", "corpus"};
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        if (!known.contains(key)) throw ConfigError("unknown key '" + key + "'");
    }
    auto& plan = cfg.plan;
    if (root["methods"]) plan.methods = enum_list<WorkflowKind>(root["methods"], parse_workflow_kind);
    if (root["difficulties"]) {
        plan.difficulties = enum_list<DifficultyLevel>(root["difficulties"], parse_difficulty);
    }
    if (root["strategies"]) {
        plan.strategies = enum_list<SamplingStrategy>(root["strategies"], parse_strategy);
    }
    if (root["rounds"]) plan.rounds = int_list(root["rounds"]);
    if (root["agents"]) plan.agents = int_list(root["agents"]);
    if (root["curation"]) plan.curation = enum_list<CurationMode>(root["curation"], parse_curation);
    if (root["modes"]) plan.modes = enum_list<GenerationMode>(root["modes"], parse_generation_mode);
    if (root["kcs"]) plan.kcs = scalars(root["kcs"]);
    if (root["repetitions"]) plan.repetitions = root["repetitions"].as<int>();
    if (root["pool_size"]) plan.pool_size = root["pool_size"].as<std::size_t>();
    if (root["k"]) plan.k = root["k"].as<std::size_t>();
    if (root["seed"]) plan.seed = root["seed"].as<std::uint64_t>();
    if (root["allow_out_of_range"]) plan.allow_out_of_range = root["allow_out_of_range"].as<bool>();
    if (root["concurrency"]) cfg.concurrency = root["concurrency"].as<int>();
    if (root["templates_dir"]) cfg.templates_dir = root["templates_dir"].as<std::string>();

    if (const auto g = root["generator"]) {
        if (g["model"]) cfg.models.generator = g["model"].as<std::string>();
        if (g["max_tokens"]) cfg.models.max_tokens = g["max_tokens"].as<int>();
    }
    if (const auto j = root["judge"]) {
        if (j["model"]) cfg.models.judge = j["model"].as<std::string>();
        if (j["mode"]) {
            const auto mode = j["mode"].as<std::string>();
            if (mode == "per_metric") cfg.judge_mode = JudgeMode::PerMetric;
            else if (mode == "combined") cfg.judge_mode = JudgeMode::Combined;
            else throw ConfigError("judge.mode must be per_metric or combined");
        }
    }
    if (const auto b = root["backend"]) {
        if (b["base_url"]) cfg.live.base_url = b["base_url"].as<std::string>();
        if (b["api_key_env"]) cfg.live.api_key_env = b["api_key_env"].as<std::string>();
        if (b["timeout_s"]) cfg.live.timeout = std::chrono::seconds(b["timeout_s"].as<int>());
        if (b["max_concurrency"]) cfg.live.max_concurrency = b["max_concurrency"].as<int>();
    }
    if (const auto r = root["retry"]) {
        if (r["max_retries"]) cfg.live.retry.max_retries = r["max_retries"].as<int>();
        if (r["initial_backoff_ms"]) {
            cfg.live.retry.initial_backoff = std::chrono::milliseconds(r["initial_backoff_ms"].as<int>());
        }
        if (r["max_backoff_ms"]) {
            cfg.live.retry.max_backoff = std::chrono::milliseconds(r["max_backoff_ms"].as<int>());
        }
        if (r["multiplier"]) cfg.live.retry.multiplier = r["multiplier"].as<double>();
    }
    if (const auto c = root["corpus"]) {
        if (c["delimiter"]) {
            auto d = c["delimiter"].as<std::string>();
            if (d == "\\t" || d == "tab") d = "\t";
            if (d.size() != 1) throw ConfigError("corpus.delimiter must be one character");
            cfg.corpus_format.delimiter = d[0];
        }
        if (const auto cols = c["columns"]) {
            if (cols["problem_id"]) cfg.corpus_format.problem_id_column = cols["problem_id"].as<std::string>();
            if (cols["body"]) cfg.corpus_format.body_column = cols["body"].as<std::string>();
            if (cols["percent_correct"]) {
                cfg.corpus_format.percent_correct_column = cols["percent_correct"].as<std::string>();
            }
            if (cols["kc_name"]) cfg.corpus_format.kc_column = cols["kc_name"].as<std::string>();
        }
    }
}

}  // namespace

RunSettings parse_config(const std::string& yaml_text) {
    RunSettings cfg;
    try {
        const auto root = YAML::Load(yaml_text);
        if (root.IsMap()) read_into(root, cfg);
        else if (!root.IsNull()) throw ConfigError("config must be a mapping of keys to values");
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    cfg.plan.validate();
    if (cfg.concurrency < 1) throw ConfigError("concurrency must be at least 1");
    if (cfg.live.retry.max_retries < 0) throw ConfigError("retry.max_retries must be >= 0");
    return cfg;
}

RunSettings load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace mathgen
