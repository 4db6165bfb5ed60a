// mathgen command line: run sweeps, render reports, check corpora.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mathgen/config.hpp"
#include "mathgen/corpus.hpp"
#include "mathgen/error.hpp"
#include "mathgen/harness.hpp"
#include "mathgen/report.hpp"
#include "mathgen/templates.hpp"

namespace {

using namespace mathgen;

struct RunArgs {
    std::string config;
    std::string corpus;
    std::string backend = "mock";
    std::string script;
    std::optional<std::uint64_t> seed;
    std::string out = "results";
    std::optional<int> concurrency;
};

Corpus load_tiered(const std::string& path, const CorpusFormat& format) {
    auto loaded = load_corpus(path, format);
    for (const auto& e : loaded.errors) {
        spdlog::warn("{}: row {}: {}", path, e.row, e.message);
    }
    return assign_difficulty(loaded.corpus);
}

int cmd_run(const RunArgs& args) {
    RunSettings settings = args.config.empty() ? RunSettings{} : load_config(args.config);
    if (args.seed) settings.plan.seed = *args.seed;
    if (args.concurrency) settings.concurrency = *args.concurrency;
    settings.plan.validate();

    const Corpus corpus = load_tiered(args.corpus, settings.corpus_format);
    const TemplateSet templates = settings.templates_dir
                                      ? TemplateSet::with_overrides(*settings.templates_dir)
                                      : TemplateSet::defaults();

    std::unique_ptr<ChatBackend> backend;
    if (args.backend == "mock") {
        if (args.script.empty()) throw ConfigError("--backend mock requires --script");
        backend = std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(args.script));
    } else if (args.backend == "live") {
        backend = std::make_unique<OpenAIBackend>(settings.live);
    } else {
        throw ConfigError("unknown backend '" + args.backend + "'");
    }

    const auto summary = run_experiment(settings, corpus, *backend, args.out, templates);
    std::cout << fmt::format("planned {} skipped {} completed {} failed {}\n", summary.planned,
                             summary.skipped, summary.completed, summary.failed);
    return summary.failed == 0 ? 0 : 2;
}

int cmd_report(const std::string& records_path, const std::string& out) {
    const auto records = read_records(records_path);
    const auto files = report(records, out);
    for (const auto& group : {files.tables, files.figures, files.data}) {
        for (const auto& p : group) std::cout << p.string() << '\n';
    }
    return 0;
}

int cmd_validate(const std::string& corpus_path, const std::string& config) {
    const RunSettings settings = config.empty() ? RunSettings{} : load_config(config);
    auto loaded = load_corpus(corpus_path, settings.corpus_format);
    for (const auto& e : loaded.errors) {
        std::cout << fmt::format("row {}: {}\n", e.row, e.message);
    }
    const auto& corpus = loaded.corpus;
    std::cout << fmt::format("{} valid records, {} rejected, {} knowledge components\n",
                             corpus.size(), loaded.errors.size(), corpus.kc_names().size());
    if (corpus.size() >= 3) {
        const auto tiered = assign_difficulty(corpus);
        std::size_t counts[3] = {0, 0, 0};
        for (const auto& r : tiered.records()) ++counts[static_cast<int>(*r.difficulty)];
        std::cout << fmt::format("tiers: easy {} medium {} hard {}\n", counts[0], counts[1], counts[2]);
    } else {
        std::cout << "too few records to assign difficulty tiers\n";
    }
    return loaded.errors.empty() && corpus.size() >= 3 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent math question generation experiments"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Execute an experiment plan");
    run_cmd->add_option("--config", run.config, "YAML config file")->check(CLI::ExistingFile);
    run_cmd->add_option("--corpus", run.corpus, "Problem corpus (CSV)")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--backend", run.backend, "live or mock")->check(CLI::IsMember({"live", "mock"}));
    run_cmd->add_option("--script", run.script, "Mock backend script (JSON)")->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", run.seed, "Plan seed");
    run_cmd->add_option("--out", run.out, "Output directory");
    run_cmd->add_option("--concurrency", run.concurrency, "Cells run in parallel")->check(CLI::PositiveNumber);

    std::string records_path, report_out = "report";
    auto* report_cmd = app.add_subcommand("report", "Render tables and figures from runs.jsonl");
    report_cmd->add_option("--records", records_path, "runs.jsonl")->required()->check(CLI::ExistingFile);
    report_cmd->add_option("--out", report_out, "Output directory");

    std::string validate_corpus, validate_config;
    auto* validate_cmd = app.add_subcommand("validate-corpus", "Check a corpus file and show its tiers");
    validate_cmd->add_option("--corpus", validate_corpus, "Problem corpus (CSV)")->required()->check(CLI::ExistingFile);
    validate_cmd->add_option("--config", validate_config, "YAML config with corpus column names")
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return cmd_run(run);
        if (*report_cmd) return cmd_report(records_path, report_out);
        if (*validate_cmd) return cmd_validate(validate_corpus, validate_config);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
