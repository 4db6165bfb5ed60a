#include "mathgen/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <stdexcept>

#include "mathgen/error.hpp"

namespace mathgen {

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::Clarity: return "clarity";
        case Metric::Relevance: return "relevance";
        case Metric::Importance: return "importance";
        case Metric::DifficultyMatching: return "difficulty_matching";
        case Metric::Answerability: return "answerability";
    }
    return "unknown";
}

std::string_view display_name(Metric m) {
    switch (m) {
        case Metric::Clarity: return "Clarity";
        case Metric::Relevance: return "Relevance";
        case Metric::Importance: return "Importance";
        case Metric::DifficultyMatching: return "Difficulty Matching";
        case Metric::Answerability: return "Answerability";
    }
    return "Unknown";
}

std::string_view grammar_label(Metric m) {
    switch (m) {
        case Metric::Clarity: return "CLARITY";
        case Metric::Relevance: return "RELEVANCE";
        case Metric::Importance: return "IMPORTANCE";
        case Metric::DifficultyMatching: return "DIFFICULTY_MATCHING";
        case Metric::Answerability: return "ANSWERABILITY";
    }
    return "UNKNOWN";
}

Metric parse_metric(std::string_view text) {
    std::string t;
    for (char c : text) {
        if (c == ' ' || c == '-') c = '_';
        t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    for (auto m : kMetrics) {
        if (to_string(m) == t) return m;
    }
    throw ConfigError("unknown metric '" + std::string(text) + "'");
}

double average_score(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("average of no values");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

EvalScores EvalScores::from(const std::array<int, 5>& values) {
    EvalScores s;
    s.values = values;
    int sum = 0;
    for (auto v : values) {
        if (v < 1 || v > 5) throw std::out_of_range("rubric score outside [1, 5]");
        sum += v;
    }
    s.avg_score = static_cast<double>(sum) / 5.0;
    return s;
}

namespace {

std::string rubric_name(Metric m) { return "rubric_" + std::string(to_string(m)); }

}  // namespace

std::vector<ChatMessage> render_judge_prompt(const TemplateSet& templates, const QAPair& pair,
                                             Metric metric, const GenerationContext& ctx) {
    auto vars = context_vars(ctx);
    vars["metric"] = std::string(display_name(metric));
    vars["rubric"] = templates.get(rubric_name(metric));
    vars["question"] = pair.question;
    vars["answer"] = pair.answer;
    return {{ChatRole::System, templates.render("judge_system", vars)},
            {ChatRole::User, templates.render("judge_user", vars)}};
}

int judge_metric(const QAPair& pair, Metric metric, const GenerationContext& ctx,
                 const AgentEnv& env) {
    auto turn = ask(env,
                    TurnSpec{{AgentRole::Judge, static_cast<int>(index_of(metric)) + 1}, 0,
                             env.models.judge, 0.0, std::nullopt, "SCORE: <integer 1-5>"},
                    render_judge_prompt(env.templates, pair, metric, ctx),
                    [](std::string_view t) { return parse_score(t); });
    return turn.value;
}

EvalScores evaluate(const QAPair& pair, const GenerationContext& ctx, const AgentEnv& env,
                    JudgeMode mode) {
    std::array<int, 5> values{};
    if (mode == JudgeMode::PerMetric) {
        for (auto m : kMetrics) values[index_of(m)] = judge_metric(pair, m, ctx, env);
        return EvalScores::from(values);
    }

    auto vars = context_vars(ctx);
    std::string rubric;
    std::string format;
    for (auto m : kMetrics) {
        if (!rubric.empty()) rubric += "\n";
        rubric += env.templates.get(rubric_name(m));
        format += std::string(grammar_label(m)) + ": <integer 1-5>\n";
    }
    vars["rubric"] = rubric;
    vars["metric"] = "all criteria";
    vars["question"] = pair.question;
    vars["answer"] = pair.answer;
    auto turn = ask(env,
                    TurnSpec{{AgentRole::Judge, 0}, 0, env.models.judge, 0.0, std::nullopt, format},
                    {{ChatRole::System, env.templates.render("judge_combined_system", vars)},
                     {ChatRole::User, env.templates.render("judge_user", vars)}},
                    [](std::string_view t) {
                        std::array<int, 5> v{};
                        for (auto m : kMetrics) v[index_of(m)] = parse_score(t, grammar_label(m));
                        return v;
                    });
    return EvalScores::from(turn.value);
}

}  // namespace mathgen
