#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mathgen/random.hpp"

namespace mathgen {

enum class DifficultyLevel { Easy, Medium, Hard };

enum class SamplingStrategy { Empirical, PromptingEmpirical, PromptingSimple };

std::string_view to_string(DifficultyLevel d);
std::string_view to_string(SamplingStrategy s);
DifficultyLevel parse_difficulty(std::string_view text);
SamplingStrategy parse_strategy(std::string_view text);

struct ProblemRecord {
    std::string problem_id;
    std::string kc_name;
    std::string body;
    double percent_correct = 0.0;
    std::optional<DifficultyLevel> difficulty;
};

class Corpus {
public:
    Corpus() = default;
    // Throws CorpusError on duplicate ids or out-of-range percent_correct.
    explicit Corpus(std::vector<ProblemRecord> records);

    const std::vector<ProblemRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool has_kc(const std::string& kc) const { return kc_index_.contains(kc); }
    // Indices into records(), in file order.
    const std::vector<std::size_t>& kc_records(const std::string& kc) const;
    std::vector<std::string> kc_names() const;
    bool tiers_assigned() const;

private:
    std::vector<ProblemRecord> records_;
    std::map<std::string, std::vector<std::size_t>> kc_index_;
};

struct CorpusFormat {
    char delimiter = ',';
    std::string problem_id_column = "problem_id";
    std::string body_column = "body";
    std::string percent_correct_column = "percent_correct";
    std::string kc_column = "kc_name";
};

struct RowError {
    std::size_t row = 0;  // 1-based data row, header excluded
    std::string message;
};

struct LoadResult {
    Corpus corpus;
    std::vector<RowError> errors;
};

// Accepts fractions (0-1) and percentages (values > 1 are divided by 100, a
// trailing '%' always means percent). Bad rows are reported, not loaded.
LoadResult load_corpus(const std::string& path, const CorpusFormat& format = {});
LoadResult parse_corpus(std::string_view text, const CorpusFormat& format = {});

// Parses one percent-correct cell into [0, 1]; nullopt when unparseable or out of range.
std::optional<double> normalize_percent(std::string_view cell);

// Tercile split on percent_correct, descending; ties by ascending problem_id.
Corpus assign_difficulty(const Corpus& corpus);

// Numeric comparison when both ids are all digits, lexicographic otherwise.
bool problem_id_less(const std::string& a, const std::string& b);

struct SampledExample {
    ProblemRecord record;
    std::optional<DifficultyLevel> shown_label;
};

std::vector<SampledExample> sample_examples(const Corpus& corpus, const std::string& kc,
                                            DifficultyLevel requested, SamplingStrategy strategy,
                                            std::size_t k, Rng& rng);

}  // namespace mathgen
