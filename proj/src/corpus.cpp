#include "mathgen/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "mathgen/error.hpp"

namespace mathgen {

std::string_view to_string(DifficultyLevel d) {
    switch (d) {
        case DifficultyLevel::Easy: return "easy";
        case DifficultyLevel::Medium: return "medium";
        case DifficultyLevel::Hard: return "hard";
    }
    return "unknown";
}

std::string_view to_string(SamplingStrategy s) {
    switch (s) {
        case SamplingStrategy::Empirical: return "empirical";
        case SamplingStrategy::PromptingEmpirical: return "prompting_empirical";
        case SamplingStrategy::PromptingSimple: return "prompting_simple";
    }
    return "unknown";
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

DifficultyLevel parse_difficulty(std::string_view text) {
    const auto t = lower(trim(text));
    if (t == "easy") return DifficultyLevel::Easy;
    if (t == "medium") return DifficultyLevel::Medium;
    if (t == "hard") return DifficultyLevel::Hard;
    throw ConfigError("unknown difficulty '" + std::string(text) + "'");
}

SamplingStrategy parse_strategy(std::string_view text) {
    auto t = lower(trim(text));
    std::replace(t.begin(), t.end(), ' ', '_');
    std::replace(t.begin(), t.end(), '-', '_');
    if (t == "empirical") return SamplingStrategy::Empirical;
    if (t == "prompting_empirical") return SamplingStrategy::PromptingEmpirical;
    if (t == "prompting_simple" || t == "simple") return SamplingStrategy::PromptingSimple;
    throw ConfigError("unknown sampling strategy '" + std::string(text) + "'");
}

Corpus::Corpus(std::vector<ProblemRecord> records) : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (!(r.percent_correct >= 0.0 && r.percent_correct <= 1.0)) {
            throw CorpusError("problem " + r.problem_id + ": percent_correct outside [0,1]");
        }
        kc_index_[r.kc_name].push_back(i);
    }
    std::set<std::string_view> ids;
    for (const auto& r : records_) {
        if (!ids.insert(r.problem_id).second) {
            throw CorpusError("duplicate problem_id " + r.problem_id);
        }
    }
}

const std::vector<std::size_t>& Corpus::kc_records(const std::string& kc) const {
    auto it = kc_index_.find(kc);
    if (it == kc_index_.end()) throw CorpusError("unknown KC '" + kc + "'");
    return it->second;
}

std::vector<std::string> Corpus::kc_names() const {
    std::vector<std::string> names;
    names.reserve(kc_index_.size());
    for (const auto& [name, _] : kc_index_) names.push_back(name);
    return names;
}

bool Corpus::tiers_assigned() const {
    return std::all_of(records_.begin(), records_.end(),
                       [](const ProblemRecord& r) { return r.difficulty.has_value(); });
}

namespace {

// RFC 4180 style: quoted fields may contain delimiters, doubled quotes and newlines.
std::vector<std::vector<std::string>> split_rows(std::string_view text, char delim) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && field.empty()) {
            quoted = true;
            any = true;
        } else if (c == delim) {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
        } else {
            field.push_back(c);
            any = true;
        }
    }
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::optional<double> normalize_percent(std::string_view cell) {
    auto s = trim(cell);
    bool percent = false;
    if (!s.empty() && s.back() == '%') {
        percent = true;
        s = trim(s.substr(0, s.size() - 1));
    }
    if (s.empty()) return std::nullopt;
    double value = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    if (percent || value > 1.0) value /= 100.0;
    if (!(value >= 0.0 && value <= 1.0)) return std::nullopt;
    return value;
}

LoadResult parse_corpus(std::string_view text, const CorpusFormat& format) {
    auto rows = split_rows(text, format.delimiter);
    if (rows.empty()) throw CorpusError("corpus file has no header row");

    const auto& header = rows.front();
    auto column = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (trim(header[i]) == name) return i;
        }
        throw CorpusError("missing column '" + name + "'");
    };
    const std::size_t id_col = column(format.problem_id_column);
    const std::size_t body_col = column(format.body_column);
    const std::size_t pc_col = column(format.percent_correct_column);
    const std::size_t kc_col = column(format.kc_column);
    const std::size_t needed = std::max({id_col, body_col, pc_col, kc_col}) + 1;

    LoadResult result;
    std::vector<ProblemRecord> records;
    std::set<std::string> seen;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        auto fail = [&](std::string msg) { result.errors.push_back({r, std::move(msg)}); };
        if (row.size() < needed) {
            fail("expected at least " + std::to_string(needed) + " fields, got " +
                 std::to_string(row.size()));
            continue;
        }
        ProblemRecord rec;
        rec.problem_id = std::string(trim(row[id_col]));
        rec.body = row[body_col];
        rec.kc_name = std::string(trim(row[kc_col]));
        if (rec.problem_id.empty()) {
            fail("empty problem id");
            continue;
        }
        if (rec.kc_name.empty()) {
            fail("empty KC name");
            continue;
        }
        if (trim(rec.body).empty()) {
            fail("empty problem body");
            continue;
        }
        auto pc = normalize_percent(row[pc_col]);
        if (!pc) {
            fail("percent correct '" + row[pc_col] + "' is not a number in [0,1] or [0,100]");
            continue;
        }
        rec.percent_correct = *pc;
        if (!seen.insert(rec.problem_id).second) {
            fail("duplicate problem id '" + rec.problem_id + "'");
            continue;
        }
        records.push_back(std::move(rec));
    }
    result.corpus = Corpus(std::move(records));
    return result;
}

LoadResult load_corpus(const std::string& path, const CorpusFormat& format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError("cannot open corpus file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_corpus(buf.str(), format);
}

bool problem_id_less(const std::string& a, const std::string& b) {
    auto digits = [](const std::string& s) {
        return !s.empty() &&
               std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
    };
    if (digits(a) && digits(b)) {
        auto strip = [](const std::string& s) {
            auto pos = s.find_first_not_of('0');
            return pos == std::string::npos ? std::string_view("0") : std::string_view(s).substr(pos);
        };
        auto sa = strip(a), sb = strip(b);
        if (sa.size() != sb.size()) return sa.size() < sb.size();
        if (sa != sb) return sa < sb;
    }
    return a < b;
}

Corpus assign_difficulty(const Corpus& corpus) {
    const std::size_t n = corpus.size();
    if (n < 3) throw CorpusError("need at least 3 records to form three difficulty tiers");

    std::vector<ProblemRecord> records = corpus.records();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ra = records[a];
        const auto& rb = records[b];
        if (ra.percent_correct != rb.percent_correct) return ra.percent_correct > rb.percent_correct;
        return problem_id_less(ra.problem_id, rb.problem_id);
    });
    const std::size_t easy_end = n / 3;
    const std::size_t medium_end = 2 * n / 3;
    for (std::size_t rank = 0; rank < n; ++rank) {
        records[order[rank]].difficulty = rank < easy_end     ? DifficultyLevel::Easy
                                          : rank < medium_end ? DifficultyLevel::Medium
                                                              : DifficultyLevel::Hard;
    }
    return Corpus(std::move(records));
}

namespace {

std::vector<std::size_t> filter_tier(const Corpus& corpus, const std::vector<std::size_t>& ids,
                                     DifficultyLevel tier) {
    std::vector<std::size_t> out;
    for (auto i : ids) {
        if (corpus.records()[i].difficulty == tier) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> all_indices(const Corpus& corpus) {
    std::vector<std::size_t> out(corpus.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
    return out;
}

}  // namespace

std::vector<SampledExample> sample_examples(const Corpus& corpus, const std::string& kc,
                                            DifficultyLevel requested, SamplingStrategy strategy,
                                            std::size_t k, Rng& rng) {
    if (k == 0) throw CorpusError("few-shot count k must be at least 1");
    const auto& kc_ids = corpus.kc_records(kc);
    if (strategy != SamplingStrategy::PromptingSimple && !corpus.tiers_assigned()) {
        throw CorpusError("difficulty tiers must be assigned before empirical sampling");
    }

    std::vector<std::size_t> pool;
    if (strategy == SamplingStrategy::PromptingEmpirical) {
        pool = filter_tier(corpus, kc_ids, requested);
        if (pool.size() < k) {
            spdlog::warn("KC '{}' has {} {} examples (< k={}); drawing {} examples corpus-wide", kc,
                         pool.size(), to_string(requested), k, to_string(requested));
            pool = filter_tier(corpus, all_indices(corpus), requested);
        }
        if (pool.empty()) {
            throw CorpusError("no " + std::string(to_string(requested)) +
                              " examples available for prompting_empirical sampling");
        }
    } else {
        pool = kc_ids;
        if (pool.size() < k) {
            spdlog::warn("KC '{}' has {} examples (< k={}); drawing corpus-wide", kc, pool.size(), k);
            pool = all_indices(corpus);
        }
    }
    if (pool.size() < k) {
        spdlog::warn("only {} eligible examples for k={}", pool.size(), k);
    }

    std::vector<SampledExample> out;
    const auto& recs = corpus.records();
    switch (strategy) {
        case SamplingStrategy::Empirical: {
            // Round-robin over tiers so every tier is represented when possible.
            std::array<std::vector<std::size_t>, 3> tiers;
            for (auto i : pool) tiers[static_cast<int>(*recs[i].difficulty)].push_back(i);
            for (auto& t : tiers) shuffle(t.begin(), t.end(), rng);
            std::array<std::size_t, 3> next{};
            while (out.size() < k && out.size() < pool.size()) {
                for (int t = 0; t < 3 && out.size() < k; ++t) {
                    if (next[t] < tiers[t].size()) {
                        const auto& rec = recs[tiers[t][next[t]++]];
                        out.push_back({rec, rec.difficulty});
                    }
                }
            }
            break;
        }
        case SamplingStrategy::PromptingEmpirical:
        case SamplingStrategy::PromptingSimple: {
            shuffle(pool.begin(), pool.end(), rng);
            const bool labelled = strategy == SamplingStrategy::PromptingEmpirical;
            for (std::size_t i = 0; i < pool.size() && out.size() < k; ++i) {
                const auto& rec = recs[pool[i]];
                out.push_back({rec, labelled ? rec.difficulty : std::nullopt});
            }
            break;
        }
    }
    return out;
}

}  // namespace mathgen
