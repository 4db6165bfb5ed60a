#include "mathgen/curation.hpp"

#include <optional>
#include <stdexcept>

namespace mathgen {

BloomScore::BloomScore(int value) : value_(value) {
    if (value < 1 || value > 5) {
        throw std::out_of_range("Bloom score must be in [1, 5], got " + std::to_string(value));
    }
}

std::vector<ChatMessage> render_bloom_prompt(const TemplateSet& templates, const QAPair& pair,
                                             const GenerationContext& ctx) {
    auto vars = context_vars(ctx);
    vars["question"] = pair.question;
    vars["answer"] = pair.answer;
    return {{ChatRole::System, templates.render("bloom_system", vars)},
            {ChatRole::User, templates.render("bloom_user", vars)}};
}

BloomScore bloom_score(const QAPair& pair, const GenerationContext& ctx, const AgentEnv& env) {
    auto turn = ask(env,
                    TurnSpec{{AgentRole::Bloom, 1}, 0, env.models.judge, 0.0, std::nullopt,
                             "SCORE: <integer 1-5>"},
                    render_bloom_prompt(env.templates, pair, ctx),
                    [](std::string_view t) { return parse_score(t); });
    return BloomScore(turn.value);
}

std::set<int> expected_band(DifficultyLevel d) {
    switch (d) {
        case DifficultyLevel::Easy: return {1, 2};
        case DifficultyLevel::Medium: return {3, 4};
        case DifficultyLevel::Hard: return {4, 5};
    }
    return {};
}

CurationChoice curate_bloom(const std::vector<BloomScore>& scores, DifficultyLevel d) {
    if (scores.empty()) throw std::invalid_argument("curate_bloom needs at least one candidate");
    const auto band = expected_band(d);
    const int lo = *band.begin();
    const int hi = *band.rbegin();

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!band.contains(scores[i].value())) continue;
        if (!best || scores[i].value() > scores[*best].value()) best = i;
    }
    if (best) return {*best, false};

    auto distance = [&](int v) { return v < lo ? lo - v : v > hi ? v - hi : 0; };
    std::size_t closest = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (distance(scores[i].value()) < distance(scores[closest].value())) closest = i;
    }
    return {closest, true};
}

std::size_t curate_random(std::size_t n, Rng& rng) {
    if (n == 0) throw std::invalid_argument("curate_random needs at least one candidate");
    return static_cast<std::size_t>(uniform_index(rng, n));
}

}  // namespace mathgen
