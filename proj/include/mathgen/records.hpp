#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mathgen/agents.hpp"
#include "mathgen/corpus.hpp"
#include "mathgen/evaluation.hpp"
#include "mathgen/workflows.hpp"

namespace mathgen {

enum class CurationMode { None, Bloom, Random };

std::string_view to_string(CurationMode mode);
CurationMode parse_curation(std::string_view text);

// Table label: Baseline_ZS, Baseline_FS, TCC, TCC_RC, CC, CC_RC.
std::string method_label(WorkflowKind kind, CurationMode curation);

struct CandidateRecord {
    QAPair pair;
    std::optional<int> bloom_score;
    std::uint64_t generation_seed = 0;
    std::size_t transcript_length = 0;
    std::optional<bool> consensus_reported;
    std::optional<bool> rule_consensus;
};

struct RunRecord {
    std::string run_id;

    // Fingerprint
    std::string method;
    WorkflowKind workflow = WorkflowKind::BaselineZS;
    CurationMode curation = CurationMode::None;
    std::optional<int> rounds;
    std::optional<int> n_agents;
    std::optional<int> agent_rounds;  // n_agents * rounds for CC
    SamplingStrategy strategy = SamplingStrategy::Empirical;
    bool autocot = false;
    bool solution_generation = false;
    std::size_t k = 3;
    std::size_t pool_size = 1;
    std::uint64_t plan_seed = 0;
    std::uint64_t run_seed = 0;
    std::string generator_model;
    std::string judge_model;
    std::string judge_mode = "per_metric";
    std::string backend;
    std::string kc;
    DifficultyLevel difficulty = DifficultyLevel::Medium;
    int repetition = 0;

    // Results
    std::vector<CandidateRecord> candidates;
    std::size_t chosen_index = 0;
    bool band_miss = false;
    QAPair chosen;
    EvalScores scores;
    TokenUsage usage;
    std::size_t calls = 0;

    // Wall-clock fields; excluded from determinism checks.
    std::string started_at;
    double wall_ms = 0.0;

    nlohmann::json fingerprint() const;
    nlohmann::json to_json() const;
    static RunRecord from_json(const nlohmann::json& j);

    // Value of a grouping field as text: method, workflow, curation, strategy,
    // difficulty, kc, rounds, n_agents, agent_rounds, mode. Absent values are "".
    std::string field(std::string_view name) const;
};

// Stable short hash of a fingerprint (16 hex digits of SHA-256 over its JSON dump).
std::string fingerprint_hash(const nlohmann::json& fingerprint);

std::vector<RunRecord> read_records(const std::filesystem::path& path);

// Removes the wall-clock fields from a serialized record.
nlohmann::json without_timing(nlohmann::json record);

struct SummaryRow {
    std::vector<std::string> key;
    std::size_t count = 0;
    std::array<double, 5> means{};  // indexed by Metric
    double avg_score = 0.0;
};

/// Per-group metric means, full precision. Groups are sorted by key with
/// numeric-aware comparison. Sums are taken over integers so the result does
/// not depend on record order.
std::vector<SummaryRow> aggregate(std::span<const RunRecord> records,
                                  const std::vector<std::string>& group_by);

// Two-decimal rendering, rounding halves away from zero.
std::string render_2dp(double value);

// Counts of scores 1..5 (index 0 holds score 1).
std::array<std::size_t, 5> score_histogram(std::span<const RunRecord> records, Metric metric);

}  // namespace mathgen
