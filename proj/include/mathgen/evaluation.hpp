#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>

#include "mathgen/agents.hpp"

namespace mathgen {

enum class Metric { Clarity, Relevance, Importance, DifficultyMatching, Answerability };

inline constexpr std::array<Metric, 5> kMetrics = {
    Metric::Clarity, Metric::Relevance, Metric::Importance, Metric::DifficultyMatching,
    Metric::Answerability};

std::string_view to_string(Metric m);      // snake_case key
std::string_view display_name(Metric m);   // column heading
std::string_view grammar_label(Metric m);  // label in combined judge replies
Metric parse_metric(std::string_view text);

inline std::size_t index_of(Metric m) { return static_cast<std::size_t>(m); }

// Arithmetic mean; throws std::invalid_argument on an empty span.
double average_score(std::span<const double> values);

struct EvalScores {
    std::array<int, 5> values{};  // indexed by Metric
    double avg_score = 0.0;

    // Throws std::out_of_range unless every value is in [1, 5].
    static EvalScores from(const std::array<int, 5>& values);
    int operator[](Metric m) const { return values[index_of(m)]; }
    bool operator==(const EvalScores&) const = default;
};

enum class JudgeMode { PerMetric, Combined };

std::vector<ChatMessage> render_judge_prompt(const TemplateSet& templates, const QAPair& pair,
                                             Metric metric, const GenerationContext& ctx);

// One judge call at temperature 0.
int judge_metric(const QAPair& pair, Metric metric, const GenerationContext& ctx,
                 const AgentEnv& env);

// Five independent judge calls, or a single call in Combined mode.
EvalScores evaluate(const QAPair& pair, const GenerationContext& ctx, const AgentEnv& env,
                    JudgeMode mode = JudgeMode::PerMetric);

}  // namespace mathgen
