#include "mathgen/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "mathgen/error.hpp"

namespace mathgen {

namespace {

const std::vector<std::string> kMethodOrder = {"Baseline_ZS", "Baseline_FS", "CC_RC",
                                               "TCC_RC",      "CC",          "TCC"};

std::size_t method_rank(const std::string& m) {
    auto it = std::find(kMethodOrder.begin(), kMethodOrder.end(), m);
    return static_cast<std::size_t>(it - kMethodOrder.begin());
}

bool method_less(const std::string& a, const std::string& b) {
    const auto ra = method_rank(a), rb = method_rank(b);
    if (ra != rb) return ra < rb;
    return a < b;
}

void mark_best(Table& t, std::size_t first_numeric, std::size_t last_numeric) {
    t.best.assign(t.rows.size(), std::vector<bool>(t.header.size(), false));
    for (std::size_t c = first_numeric; c <= last_numeric && c < t.header.size(); ++c) {
        double best = -1.0;
        for (const auto& row : t.rows) best = std::max(best, std::stod(row[c]));
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            t.best[r][c] = std::stod(t.rows[r][c]) == best;
        }
    }
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string strategy_display(SamplingStrategy s) {
    switch (s) {
        case SamplingStrategy::Empirical: return "empirical";
        case SamplingStrategy::PromptingEmpirical: return "prompting empirical";
        case SamplingStrategy::PromptingSimple: return "prompting simple";
    }
    return "";
}

}  // namespace

Table method_table(std::span<const RunRecord> records) {
    Table t;
    t.header = {"Method"};
    for (auto m : kMetrics) t.header.emplace_back(display_name(m));
    t.header.emplace_back("Avg. Score");
    t.header.emplace_back("N");

    auto rows = aggregate(records, {"method"});
    std::sort(rows.begin(), rows.end(),
              [](const SummaryRow& a, const SummaryRow& b) { return method_less(a.key[0], b.key[0]); });
    for (const auto& row : rows) {
        std::vector<std::string> cells{row.key[0]};
        for (auto v : row.means) cells.push_back(render_2dp(v));
        cells.push_back(render_2dp(row.avg_score));
        cells.push_back(std::to_string(row.count));
        t.rows.push_back(std::move(cells));
    }
    mark_best(t, 1, 6);
    return t;
}

Table strategy_table(std::span<const RunRecord> records) {
    Table t;
    t.header = {"Method", "Difficulty Prompting Strategy", "Difficulty Matching", "Avg. Score", "N"};
    std::vector<RunRecord> curated;
    for (const auto& r : records) {
        if (r.method == "CC" || r.method == "TCC") curated.push_back(r);
    }
    auto rows = aggregate(curated, {"method", "strategy"});
    std::sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
        if (a.key[0] != b.key[0]) return method_less(a.key[0], b.key[0]);
        return parse_strategy(a.key[1]) < parse_strategy(b.key[1]);
    });
    for (const auto& row : rows) {
        t.rows.push_back({row.key[0], strategy_display(parse_strategy(row.key[1])),
                          render_2dp(row.means[index_of(Metric::DifficultyMatching)]),
                          render_2dp(row.avg_score), std::to_string(row.count)});
    }
    mark_best(t, 2, 3);
    return t;
}

std::string to_csv(const Table& table) {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            out << csv_field(cells[i]);
        }
        out << '\n';
    };
    line(table.header);
    for (const auto& row : table.rows) line(row);
    return out.str();
}

std::string to_markdown(const Table& table) {
    std::ostringstream out;
    out << '|';
    for (const auto& h : table.header) out << ' ' << h << " |";
    out << "\n|";
    for (std::size_t i = 0; i < table.header.size(); ++i) out << (i < 1 ? " --- |" : " ---: |");
    out << '\n';
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        out << '|';
        for (std::size_t c = 0; c < table.rows[r].size(); ++c) {
            const bool bold = r < table.best.size() && table.best[r][c];
            out << ' ' << (bold ? "**" : "") << table.rows[r][c] << (bold ? "**" : "") << " |";
        }
        out << '\n';
    }
    return out.str();
}

std::string format_value(double value) { return fmt::format("{}", value); }

namespace {

struct Cellwise {
    std::int64_t sum = 0;
    std::size_t n = 0;
    void add(const EvalScores& s, std::optional<Metric> metric) {
        if (metric) {
            sum += s[*metric];
            n += 1;
        } else {
            for (auto v : s.values) sum += v;
            n += 5;
        }
    }
    double mean() const { return static_cast<double>(sum) / static_cast<double>(n); }
};

// Mean of `metric` (or of the average score) per (series, x).
Panel mean_panel(std::span<const RunRecord> records, const std::string& title,
                 const std::string& x_label, std::optional<Metric> metric, bool bars,
                 const std::function<std::optional<std::string>(const RunRecord&)>& x_of,
                 const std::function<bool(const std::string&, const std::string&)>& x_less) {
    Panel p;
    p.title = title;
    p.x_label = x_label;
    p.y_label = metric ? std::string(display_name(*metric)) : "Avg. Score";
    p.bars = bars;
    std::map<std::string, std::map<std::string, Cellwise>> acc;
    std::set<std::string> xs_seen;
    for (const auto& r : records) {
        auto x = x_of(r);
        if (!x) continue;
        acc[r.method][*x].add(r.scores, metric);
        xs_seen.insert(*x);
    }
    p.categories.assign(xs_seen.begin(), xs_seen.end());
    std::sort(p.categories.begin(), p.categories.end(), x_less);
    std::vector<std::string> methods;
    for (const auto& [m, _] : acc) methods.push_back(m);
    std::sort(methods.begin(), methods.end(), method_less);
    for (const auto& m : methods) {
        Series s;
        s.name = m;
        for (const auto& x : p.categories) {
            auto it = acc[m].find(x);
            if (it == acc[m].end()) continue;
            s.x.push_back(x);
            s.y.push_back(it->second.mean());
            s.n.push_back(metric ? it->second.n : it->second.n / 5);
        }
        p.series.push_back(std::move(s));
    }
    return p;
}

bool numeric_less(const std::string& a, const std::string& b) { return problem_id_less(a, b); }

bool difficulty_less(const std::string& a, const std::string& b) {
    return parse_difficulty(a) < parse_difficulty(b);
}

std::optional<std::string> opt_int(const std::optional<int>& v) {
    if (!v) return std::nullopt;
    return std::to_string(*v);
}

}  // namespace

Figure difficulty_figure(std::span<const RunRecord> records) {
    auto x = [](const RunRecord& r) { return std::optional<std::string>(to_string(r.difficulty)); };
    return {"fig_difficulty_methods",
            "Average score and difficulty matching by difficulty and method",
            {mean_panel(records, "Avg. Score", "Difficulty", std::nullopt, true, x, difficulty_less),
             mean_panel(records, "Difficulty Matching", "Difficulty", Metric::DifficultyMatching, true,
                        x, difficulty_less)}};
}

Figure rounds_figure(std::span<const RunRecord> records) {
    auto x = [](const RunRecord& r) {
        return r.workflow == WorkflowKind::TCC || r.workflow == WorkflowKind::CC ? opt_int(r.rounds)
                                                                                 : std::nullopt;
    };
    return {"fig_rounds",
            "Average score by number of rounds",
            {mean_panel(records, "Avg. Score by rounds", "Rounds", std::nullopt, false, x,
                        numeric_less)}};
}

Figure agents_figure(std::span<const RunRecord> records) {
    auto x = [](const RunRecord& r) {
        return r.workflow == WorkflowKind::CC ? opt_int(r.n_agents) : std::nullopt;
    };
    return {"fig_agents",
            "Average score by number of agents (Collective Consensus)",
            {mean_panel(records, "Avg. Score by agents", "Agents", std::nullopt, false, x,
                        numeric_less)}};
}

Figure agent_rounds_figure(std::span<const RunRecord> records) {
    auto x = [](const RunRecord& r) {
        return r.workflow == WorkflowKind::CC ? opt_int(r.agent_rounds) : std::nullopt;
    };
    return {"fig_agent_rounds",
            "Average score by agents x rounds (Collective Consensus)",
            {mean_panel(records, "Avg. Score by agent rounds", "Agents x rounds", std::nullopt,
                        false, x, numeric_less)}};
}

Figure histogram_figure(std::span<const RunRecord> records) {
    Figure f{"fig_histograms", "Histogram of evaluation metrics", {}};
    for (auto m : kMetrics) {
        Panel p;
        p.title = std::string(display_name(m));
        p.x_label = "Score";
        p.y_label = "Count";
        p.bars = true;
        p.categories = {"1", "2", "3", "4", "5"};
        const auto bins = score_histogram(records, m);
        Series s;
        s.name = "count";
        for (std::size_t b = 0; b < 5; ++b) {
            s.x.push_back(p.categories[b]);
            s.y.push_back(static_cast<double>(bins[b]));
            s.n.push_back(bins[b]);
        }
        p.series.push_back(std::move(s));
        f.panels.push_back(std::move(p));
    }
    return f;
}

std::vector<Figure> all_figures(std::span<const RunRecord> records) {
    return {difficulty_figure(records), rounds_figure(records), agents_figure(records),
            agent_rounds_figure(records), histogram_figure(records)};
}

std::string figure_data_csv(const Figure& figure) {
    std::ostringstream out;
    out << "panel,series,x,value,n\n";
    for (const auto& p : figure.panels) {
        for (const auto& s : p.series) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                out << csv_field(p.title) << ',' << csv_field(s.name) << ',' << csv_field(s.x[i])
                    << ',' << format_value(s.y[i]) << ',' << s.n[i] << '\n';
            }
        }
    }
    return out.str();
}

std::string render_svg(const Figure& figure) {
    static const std::vector<std::string> palette = {"#4e79a7", "#f28e2b", "#e15759",
                                                     "#76b7b2", "#59a14f", "#edc948",
                                                     "#b07aa1", "#ff9da7"};
    constexpr double panel_w = 420, panel_h = 320;
    constexpr double left = 56, right = 16, top = 56, bottom = 48;
    const double width = panel_w * static_cast<double>(std::max<std::size_t>(1, figure.panels.size()));
    const double height = panel_h + 24;

    std::ostringstream svg;
    svg << fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
        "font-family=\"sans-serif\" font-size=\"11\">\n",
        width, height, width, height);
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << fmt::format("<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                       width / 2, xml_escape(figure.title));

    for (std::size_t pi = 0; pi < figure.panels.size(); ++pi) {
        const auto& p = figure.panels[pi];
        const double ox = panel_w * static_cast<double>(pi);
        const double x0 = ox + left, x1 = ox + panel_w - right;
        const double y0 = top + (panel_h - top - bottom) + 24, y1 = top + 24;

        double y_max = 5.0;
        if (p.y_label == "Count") {
            y_max = 1.0;
            for (const auto& s : p.series)
                for (double v : s.y) y_max = std::max(y_max, v);
            y_max = std::ceil(y_max * 1.1);
        }
        auto ypos = [&](double v) { return y0 - (y0 - y1) * v / y_max; };

        svg << fmt::format("<g class=\"panel\" data-panel=\"{}\">\n", xml_escape(p.title));
        svg << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
                           (x0 + x1) / 2, y1 - 10, xml_escape(p.title));
        svg << fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", x0, y0, x1, y0);
        svg << fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", x0, y0, x0, y1);
        for (int t = 0; t <= 5; ++t) {
            const double v = y_max * t / 5.0;
            svg << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", x0 - 4,
                               ypos(v) + 4, format_value(std::round(v * 100) / 100));
        }
        svg << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (x0 + x1) / 2,
                           y0 + 32, xml_escape(p.x_label));
        svg << fmt::format(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{}</text>\n",
            ox + 14, (y0 + y1) / 2, ox + 14, (y0 + y1) / 2, xml_escape(p.y_label));

        if (p.categories.empty()) {
            svg << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">no data</text>\n",
                               (x0 + x1) / 2, (y0 + y1) / 2);
        }
        const double slot = p.categories.empty() ? 0 : (x1 - x0) / static_cast<double>(p.categories.size());
        auto slot_of = [&](const std::string& x) {
            auto it = std::find(p.categories.begin(), p.categories.end(), x);
            return static_cast<double>(it - p.categories.begin());
        };
        for (std::size_t c = 0; c < p.categories.size(); ++c) {
            svg << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                               x0 + slot * (c + 0.5), y0 + 14, xml_escape(p.categories[c]));
        }

        const double n_series = static_cast<double>(std::max<std::size_t>(1, p.series.size()));
        for (std::size_t si = 0; si < p.series.size(); ++si) {
            const auto& s = p.series[si];
            const auto& color = palette[si % palette.size()];
            std::string polyline;
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                const auto attrs = fmt::format(
                    "data-panel=\"{}\" data-series=\"{}\" data-x=\"{}\" data-value=\"{}\"",
                    xml_escape(p.title), xml_escape(s.name), xml_escape(s.x[i]), format_value(s.y[i]));
                const double cx = x0 + slot * slot_of(s.x[i]);
                if (p.bars) {
                    const double bw = slot * 0.8 / n_series;
                    const double bx = cx + slot * 0.1 + bw * static_cast<double>(si);
                    svg << fmt::format(
                        "<rect class=\"bar\" {} x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" "
                        "height=\"{:.2f}\" fill=\"{}\"/>\n",
                        attrs, bx, ypos(s.y[i]), bw, y0 - ypos(s.y[i]), color);
                } else {
                    const double px = cx + slot / 2;
                    polyline += fmt::format("{:.2f},{:.2f} ", px, ypos(s.y[i]));
                    svg << fmt::format(
                        "<circle class=\"point\" {} cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3.5\" fill=\"{}\"/>\n",
                        attrs, px, ypos(s.y[i]), color);
                }
            }
            if (!p.bars && s.x.size() > 1) {
                svg << fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\"/>\n", polyline, color);
            }
            if (p.series.size() > 1 || s.name != "count") {
                const double ly = 34 + 12 * static_cast<double>(si);
                svg << fmt::format("<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n",
                                   x1 - 90, ly, color);
                svg << fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", x1 - 76, ly + 9,
                                   xml_escape(s.name));
            }
        }
        svg << "</g>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

}  // namespace

ReportFiles report_tables(std::span<const RunRecord> records, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    ReportFiles files;
    const std::pair<std::string, Table> tables[] = {{"table_methods", method_table(records)},
                                                    {"table_strategies", strategy_table(records)}};
    for (const auto& [stem, table] : tables) {
        write_file(out_dir / (stem + ".csv"), to_csv(table));
        write_file(out_dir / (stem + ".md"), to_markdown(table));
        files.tables.push_back(out_dir / (stem + ".csv"));
        files.tables.push_back(out_dir / (stem + ".md"));
    }
    return files;
}

ReportFiles report_plots(std::span<const RunRecord> records, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    ReportFiles files;
    for (const auto& fig : all_figures(records)) {
        const auto svg = out_dir / (fig.name + ".svg");
        const auto csv = out_dir / (fig.name + ".csv");
        write_file(svg, render_svg(fig));
        write_file(csv, figure_data_csv(fig));
        files.figures.push_back(svg);
        files.data.push_back(csv);
    }
    return files;
}

ReportFiles report(std::span<const RunRecord> records, const std::filesystem::path& out_dir) {
    auto files = report_tables(records, out_dir);
    auto plots = report_plots(records, out_dir);
    files.figures = std::move(plots.figures);
    files.data = std::move(plots.data);
    return files;
}

}  // namespace mathgen
