#pragma once

#include <cstddef>
#include <set>
#include <vector>

#include "mathgen/agents.hpp"
#include "mathgen/corpus.hpp"
#include "mathgen/random.hpp"

namespace mathgen {

class BloomScore {
public:
    // Throws std::out_of_range outside [1, 5].
    explicit BloomScore(int value);
    int value() const noexcept { return value_; }
    auto operator<=>(const BloomScore&) const = default;

private:
    int value_;
};

// One Bloom Agent call at temperature 0 with up to two corrective retries.
BloomScore bloom_score(const QAPair& pair, const GenerationContext& ctx, const AgentEnv& env);

std::vector<ChatMessage> render_bloom_prompt(const TemplateSet& templates, const QAPair& pair,
                                             const GenerationContext& ctx);

// Easy {1,2}, Medium {3,4}, Hard {4,5}.
std::set<int> expected_band(DifficultyLevel d);

struct CurationChoice {
    std::size_t index = 0;  // 0-based into the candidate list
    bool band_miss = false;
};

/// Earliest highest-scoring in-band candidate; when none is in band, the
/// earliest candidate closest to the band, flagged band_miss.
/// Throws std::invalid_argument on an empty list.
CurationChoice curate_bloom(const std::vector<BloomScore>& scores, DifficultyLevel d);

// Uniform pick; throws std::invalid_argument when n == 0.
std::size_t curate_random(std::size_t n, Rng& rng);

}  // namespace mathgen
