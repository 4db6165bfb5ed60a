#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "mathgen/agents.hpp"
#include "mathgen/corpus.hpp"

namespace mathgen {

enum class WorkflowKind { BaselineZS, BaselineFS, TCC, CC };

std::string_view to_string(WorkflowKind kind);
WorkflowKind parse_workflow_kind(std::string_view text);

inline constexpr int kMinRounds = 2;
inline constexpr int kMaxRounds = 5;
inline constexpr int kMinAgents = 2;
inline constexpr int kMaxAgents = 4;

struct WorkflowConfig {
    WorkflowKind kind = WorkflowKind::BaselineZS;
    // TCC: critic/teacher exchanges after the initial pair.
    // CC: full passes over all agents; agent 1's first turn is the initial pair.
    int rounds = 2;
    int n_agents = 2;  // CC only
    bool autocot = false;
    bool solution_generation = false;
    SamplingStrategy strategy = SamplingStrategy::Empirical;
    std::size_t k = 3;
    std::uint64_t run_seed = 0;

    void validate() const;
};

struct GenerationOutcome {
    QAPair final_pair;
    std::size_t final_index = 0;  // 0-based into candidates
    Transcript transcript;
    std::vector<Candidate> candidates;
    std::optional<bool> consensus_reported;  // CEO's report (CC)
    std::optional<bool> rule_consensus;      // rule-based shadow (CC)
    std::optional<int> rule_consensus_candidate;
};

// Samples few-shot examples (none for BaselineZS) from a stream derived from cfg.run_seed.
GenerationContext build_context(const Corpus& corpus, const std::string& kc,
                                DifficultyLevel difficulty, const WorkflowConfig& cfg);

GenerationOutcome run_baseline_zs(const GenerationContext& ctx, const WorkflowConfig& cfg,
                                  const AgentEnv& env);
GenerationOutcome run_baseline_fs(const GenerationContext& ctx, const WorkflowConfig& cfg,
                                  const AgentEnv& env);
GenerationOutcome run_tcc(const GenerationContext& ctx, const WorkflowConfig& cfg,
                          const AgentEnv& env);
GenerationOutcome run_cc(const GenerationContext& ctx, const WorkflowConfig& cfg,
                         const AgentEnv& env);
GenerationOutcome run_workflow(const GenerationContext& ctx, const WorkflowConfig& cfg,
                               const AgentEnv& env);

// Exact transcript length a run of `cfg` produces.
std::size_t expected_transcript_length(const WorkflowConfig& cfg);

struct RuleConsensus {
    bool reached = false;
    std::optional<int> candidate;  // 1-based
};

/// True iff, in the last round present, every versatile agent other than the
/// author of the latest candidate issued AGREE targeting that candidate.
RuleConsensus detect_rule_consensus(const Transcript& transcript,
                                    const std::vector<Candidate>& candidates);

}  // namespace mathgen
