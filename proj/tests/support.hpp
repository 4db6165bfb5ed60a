#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <unistd.h>

#include "mathgen/backend.hpp"
#include "mathgen/corpus.hpp"
#include "mathgen/records.hpp"
#include "mathgen/templates.hpp"

namespace testing {

inline std::filesystem::path source_path(const std::string& rel) {
    return std::filesystem::path(MATHGEN_SOURCE_DIR) / rel;
}

inline mathgen::ScriptedBackend default_mock() {
    return mathgen::ScriptedBackend::from_file(source_path("data/mock_script.json").string());
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                fmt::format("mathgen-{}-{}-{}", tag, ::getpid(), counter++);
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// per_kc records for each KC with distinct percent-corrects spread over (0, 1).
// KCs take turns by id and the percents are a permutation, so every KC spans all tiers.
inline mathgen::Corpus synthetic_corpus(std::size_t per_kc, const std::vector<std::string>& kcs) {
    std::vector<mathgen::ProblemRecord> records;
    const std::size_t n = per_kc * kcs.size();
    for (std::size_t id = 1; id <= n; ++id) {
        const auto& kc = kcs[(id - 1) % kcs.size()];
        const double pc = static_cast<double>((id * 7919) % n + 1) / static_cast<double>(n + 1);
        records.push_back({std::to_string(id), kc, fmt::format("Problem {} about {}.", id, kc), pc,
                           std::nullopt});
    }
    return mathgen::Corpus(std::move(records));
}

inline mathgen::RunRecord scored_record(const std::string& method, std::array<int, 5> scores) {
    mathgen::RunRecord r;
    r.method = method;
    r.scores = mathgen::EvalScores::from(scores);
    return r;
}

// Per-metric means of the six methods in the published results table, in
// canonical method order, with the Avg. Score column last.
struct PublishedRow {
    std::string method;
    std::array<double, 5> means;
    std::string avg;
};

inline const std::vector<PublishedRow>& published_rows() {
    static const std::vector<PublishedRow> rows = {
        {"Baseline_ZS", {3.66, 4.61, 4.67, 4.41, 4.65}, "4.40"},
        {"Baseline_FS", {3.70, 4.93, 4.73, 4.02, 4.71}, "4.42"},
        {"CC_RC", {3.50, 4.95, 4.71, 3.94, 4.61}, "4.34"},
        {"TCC_RC", {3.72, 4.90, 4.73, 4.11, 4.79}, "4.45"},
        {"CC", {3.60, 4.99, 4.76, 4.96, 4.94}, "4.65"},
        {"TCC", {3.75, 4.92, 4.70, 4.88, 4.94}, "4.64"},
    };
    return rows;
}

// 100 integer-scored records per method whose metric means equal the
// published two-decimal means exactly (e.g. 3.66 = 66 fours and 34 threes).
// Records cycle through difficulties, sampling strategies, rounds and agents
// so every table row and figure panel is populated.
inline std::vector<mathgen::RunRecord> published_fixture() {
    using namespace mathgen;
    std::vector<RunRecord> out;
    for (const auto& row : published_rows()) {
        for (int i = 0; i < 100; ++i) {
            std::array<int, 5> s{};
            for (std::size_t m = 0; m < 5; ++m) {
                const auto hundredths = static_cast<int>(std::lround(row.means[m] * 100));
                s[m] = hundredths / 100 + (i < hundredths % 100 ? 1 : 0);
            }
            auto r = scored_record(row.method, s);
            const bool cc = row.method.rfind("CC", 0) == 0;
            const bool tcc = row.method.rfind("TCC", 0) == 0;
            r.workflow = cc    ? WorkflowKind::CC
                         : tcc ? WorkflowKind::TCC
                         : row.method == "Baseline_ZS" ? WorkflowKind::BaselineZS
                                                       : WorkflowKind::BaselineFS;
            r.curation = row.method.find("_RC") != std::string::npos ? CurationMode::Random
                         : (cc || tcc)                               ? CurationMode::Bloom
                                                                     : CurationMode::None;
            r.difficulty = static_cast<DifficultyLevel>(i % 3);
            r.strategy = static_cast<SamplingStrategy>((i / 3) % 3);
            if (cc || tcc) r.rounds = 2 + (i / 9) % 4;
            if (cc) {
                r.n_agents = 2 + (i / 36) % 3;
                r.agent_rounds = *r.rounds * *r.n_agents;
            }
            r.repetition = i;
            r.run_id = fingerprint_hash(r.fingerprint());
            out.push_back(std::move(r));
        }
    }
    return out;
}

using Mark = std::array<std::string, 4>;  // panel, series, x, value

// Data marks plotted in an SVG, read back from their attributes.
inline std::vector<Mark> svg_marks(const std::string& svg) {
    static const std::regex re(
        R"re(data-panel="([^"]*)" data-series="([^"]*)" data-x="([^"]*)" data-value="([^"]*)")re");
    std::vector<Mark> out;
    for (std::sregex_iterator it(svg.begin(), svg.end(), re), end; it != end; ++it) {
        out.push_back({(*it)[1], (*it)[2], (*it)[3], (*it)[4]});
    }
    return out;
}

// Rows of a figure sidecar (header skipped; fields carry no quoting here).
inline std::vector<Mark> sidecar_marks(const std::string& csv) {
    std::vector<Mark> out;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
        if (f.size() == 5) out.push_back({f[0], f[1], f[2], f[3]});
    }
    return out;
}

}  // namespace testing
