#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mathgen/config.hpp"
#include "mathgen/records.hpp"

namespace mathgen {

// One point of the plan's cross product.
struct Cell {
    WorkflowKind workflow = WorkflowKind::BaselineZS;
    CurationMode curation = CurationMode::None;
    DifficultyLevel difficulty = DifficultyLevel::Medium;
    SamplingStrategy strategy = SamplingStrategy::Empirical;
    GenerationMode mode = GenerationMode::Plain;
    std::optional<int> rounds;
    std::optional<int> n_agents;
    std::optional<std::string> kc;  // nullopt: picked from the corpus
    int repetition = 0;
};

std::vector<Cell> enumerate_cells(const ExperimentPlan& plan);

// Fills the fingerprint (KC resolved, run_id and run_seed derived) without running anything.
RunRecord plan_record(const Cell& cell, const RunSettings& settings, const Corpus& corpus,
                      const std::string& backend_name);

struct CellOutput {
    RunRecord record;
    nlohmann::json transcripts;  // generations with transcripts and call logs
};

// Runs one cell end to end. Throws on backend or parse failure.
CellOutput run_cell(const Cell& cell, const RunSettings& settings, const Corpus& corpus,
                    ChatBackend& backend, const TemplateSet& templates);

struct ExperimentSummary {
    std::size_t planned = 0;
    std::size_t skipped = 0;  // already present in runs.jsonl
    std::size_t completed = 0;
    std::size_t failed = 0;
};

/// Executes every cell not already recorded in `out_dir/runs.jsonl`.
///
/// Cells run on up to `settings.concurrency` threads; finished cells are
/// appended in plan order, so a fixed plan, script and seed give the same
/// file regardless of scheduling. A failing cell is written to errors.jsonl
/// and the sweep continues. Full transcripts and call logs go to
/// transcripts.jsonl. `corpus` must have difficulty tiers assigned.
ExperimentSummary run_experiment(const RunSettings& settings, const Corpus& corpus,
                                 ChatBackend& backend, const std::filesystem::path& out_dir,
                                 const TemplateSet& templates = TemplateSet::defaults());

}  // namespace mathgen
