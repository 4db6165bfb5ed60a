#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mathgen/agents.hpp"
#include "mathgen/backend.hpp"
#include "mathgen/corpus.hpp"
#include "mathgen/evaluation.hpp"
#include "mathgen/records.hpp"
#include "mathgen/workflows.hpp"

namespace mathgen {

enum class GenerationMode { Plain, AutoCoT, Solution };

std::string_view to_string(GenerationMode mode);
GenerationMode parse_generation_mode(std::string_view text);

/// Cross-product of experiment axes. Baselines ignore rounds, agents and
/// curation; agents only expand CC.
struct ExperimentPlan {
    std::vector<WorkflowKind> methods = {WorkflowKind::BaselineZS, WorkflowKind::BaselineFS,
                                         WorkflowKind::TCC, WorkflowKind::CC};
    std::vector<DifficultyLevel> difficulties = {DifficultyLevel::Easy, DifficultyLevel::Medium,
                                                 DifficultyLevel::Hard};
    std::vector<SamplingStrategy> strategies = {SamplingStrategy::Empirical,
                                                SamplingStrategy::PromptingEmpirical,
                                                SamplingStrategy::PromptingSimple};
    std::vector<int> rounds = {2, 3, 4, 5};
    std::vector<int> agents = {2, 3, 4};
    std::vector<CurationMode> curation = {CurationMode::Bloom, CurationMode::Random};
    std::vector<GenerationMode> modes = {GenerationMode::Plain};
    // Empty: each cell picks one KC from the corpus by a stable hash.
    std::vector<std::string> kcs;
    int repetitions = 5;
    std::size_t pool_size = 3;  // generations per curated cell
    std::size_t k = 3;
    std::uint64_t seed = 1;
    // Permit rounds/agents outside [2,5] / [2,4].
    bool allow_out_of_range = false;

    void validate() const;
};

struct RunSettings {
    ExperimentPlan plan;
    ModelSettings models;
    JudgeMode judge_mode = JudgeMode::PerMetric;
    LiveBackendConfig live;
    CorpusFormat corpus_format;
    std::optional<std::string> templates_dir;
    int concurrency = 4;
};

// Throws ConfigError with the offending key on any invalid entry.
RunSettings parse_config(const std::string& yaml_text);
RunSettings load_config(const std::string& path);

}  // namespace mathgen
