// Python module _mathgen: thin wrappers over the C++ library. Records and
// corpus rows cross the boundary as plain dicts.
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mathgen/config.hpp"
#include "mathgen/corpus.hpp"
#include "mathgen/curation.hpp"
#include "mathgen/error.hpp"
#include "mathgen/harness.hpp"
#include "mathgen/report.hpp"
#include "mathgen/templates.hpp"

namespace py = pybind11;
using namespace mathgen;

namespace {

py::dict record_dict(const ProblemRecord& r) {
    py::dict d;
    d["problem_id"] = r.problem_id;
    d["kc_name"] = r.kc_name;
    d["body"] = r.body;
    d["percent_correct"] = r.percent_correct;
    d["difficulty"] = r.difficulty ? py::object(py::str(std::string(to_string(*r.difficulty)))) : py::none();
    return d;
}

ProblemRecord record_from(const py::dict& d) {
    ProblemRecord r;
    r.problem_id = py::str(d["problem_id"]);
    r.kc_name = d["kc_name"].cast<std::string>();
    r.body = d.contains("body") ? d["body"].cast<std::string>() : "";
    r.percent_correct = d["percent_correct"].cast<double>();
    return r;
}

py::list records_list(const Corpus& c) {
    py::list out;
    for (const auto& r : c.records()) out.append(record_dict(r));
    return out;
}

py::dict pair_dict(const QAPair& p) {
    py::dict d;
    d["question"] = p.question;
    d["answer"] = p.answer;
    d["reasoning"] = p.reasoning ? py::object(py::str(*p.reasoning)) : py::none();
    return d;
}

py::dict summary_dict(const ExperimentSummary& s) {
    py::dict d;
    d["planned"] = s.planned;
    d["skipped"] = s.skipped;
    d["completed"] = s.completed;
    d["failed"] = s.failed;
    return d;
}

py::dict table_dict(const Table& t) {
    py::dict d;
    d["header"] = t.header;
    d["rows"] = t.rows;
    d["csv"] = to_csv(t);
    d["markdown"] = to_markdown(t);
    return d;
}

}  // namespace

PYBIND11_MODULE(_mathgen, m) {
    m.doc() = "Agentic math question generation: corpus tiers, curation, sweeps and reports";

    auto base = py::register_exception<Error>(m, "MathgenError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<CorpusError>(m, "CorpusError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<BackendError>(m, "BackendError", base.ptr());
    py::register_exception<TurnFailed>(m, "TurnFailed", base.ptr());

    m.def(
        "load_corpus",
        [](const std::string& path) {
            const auto loaded = load_corpus(path);
            py::list errors;
            for (const auto& e : loaded.errors) errors.append(py::make_tuple(e.row, e.message));
            return py::make_tuple(records_list(loaded.corpus), errors);
        },
        py::arg("path"), "Load a CSV corpus. Returns (records, [(row, message)]).");

    m.def(
        "parse_corpus",
        [](const std::string& text) {
            const auto loaded = parse_corpus(text);
            py::list errors;
            for (const auto& e : loaded.errors) errors.append(py::make_tuple(e.row, e.message));
            return py::make_tuple(records_list(loaded.corpus), errors);
        },
        py::arg("text"));

    m.def(
        "assign_difficulty",
        [](const std::vector<py::dict>& rows) {
            std::vector<ProblemRecord> recs;
            for (const auto& d : rows) recs.push_back(record_from(d));
            return records_list(assign_difficulty(Corpus(std::move(recs))));
        },
        py::arg("records"), "Tercile tiers on percent_correct; returns the records with 'difficulty' set.");

    m.def("normalize_percent", &normalize_percent, py::arg("cell"));

    m.def(
        "parse_qa", [](const std::string& text) { return pair_dict(parse_qa(text)); }, py::arg("text"));
    m.def(
        "parse_decision",
        [](const std::string& text, std::optional<std::size_t> n_candidates) {
            const auto d = parse_decision(text, n_candidates);
            py::dict out;
            out["kind"] = std::string(to_string(d.kind));
            out["pair"] = d.pair ? py::object(pair_dict(*d.pair)) : py::none();
            out["feedback"] = d.feedback ? py::object(py::str(*d.feedback)) : py::none();
            out["target"] = d.target ? py::object(py::int_(*d.target)) : py::none();
            return out;
        },
        py::arg("text"), py::arg("n_candidates") = py::none());
    m.def(
        "parse_score", [](const std::string& text, const std::string& label) { return parse_score(text, label); },
        py::arg("text"), py::arg("label") = "SCORE");

    m.def(
        "expected_band", [](const std::string& d) { return expected_band(parse_difficulty(d)); },
        py::arg("difficulty"));
    m.def(
        "curate_bloom",
        [](const std::vector<int>& scores, const std::string& d) {
            std::vector<BloomScore> s;
            for (int v : scores) s.emplace_back(v);
            const auto choice = curate_bloom(s, parse_difficulty(d));
            return py::make_tuple(choice.index, choice.band_miss);
        },
        py::arg("scores"), py::arg("difficulty"), "Returns (index, band_miss).");

    m.def("render_2dp", &render_2dp, py::arg("value"));
    m.def(
        "render_template",
        [](const std::string& name, const TemplateVars& vars) { return TemplateSet::defaults().render(name, vars); },
        py::arg("name"), py::arg("vars"));

    m.def(
        "run_experiment",
        [](const std::string& config_yaml, const std::string& corpus_path, const std::string& out_dir,
           std::optional<std::string> script) {
            const auto settings = parse_config(config_yaml);
            const auto corpus = assign_difficulty(load_corpus(corpus_path, settings.corpus_format).corpus);
            const auto templates = settings.templates_dir ? TemplateSet::with_overrides(*settings.templates_dir)
                                                          : TemplateSet::defaults();
            std::unique_ptr<ChatBackend> backend;
            if (script) {
                backend = std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(*script));
            } else {
                backend = std::make_unique<OpenAIBackend>(settings.live);
            }
            ExperimentSummary summary;
            {
                py::gil_scoped_release release;
                summary = run_experiment(settings, corpus, *backend, out_dir, templates);
            }
            return summary_dict(summary);
        },
        py::arg("config_yaml"), py::arg("corpus_path"), py::arg("out_dir"), py::arg("script") = py::none(),
        "Run a sweep. With `script` the scripted backend is used, otherwise the configured endpoint.");

    m.def(
        "method_table", [](const std::string& records) { return table_dict(method_table(read_records(records))); },
        py::arg("records_path"));
    m.def(
        "strategy_table",
        [](const std::string& records) { return table_dict(strategy_table(read_records(records))); },
        py::arg("records_path"));
    m.def(
        "report",
        [](const std::string& records, const std::string& out_dir) {
            const auto files = report(read_records(records), out_dir);
            py::dict d;
            d["tables"] = files.tables;
            d["figures"] = files.figures;
            d["data"] = files.data;
            return d;
        },
        py::arg("records_path"), py::arg("out_dir"));
}
