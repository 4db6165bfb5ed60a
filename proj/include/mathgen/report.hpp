#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mathgen/records.hpp"

namespace mathgen {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    // best[r][c]: cell holds the column maximum (at two decimals).
    std::vector<std::vector<bool>> best;
};

// Method | five metrics | Avg. Score | N, in the canonical method order.
Table method_table(std::span<const RunRecord> records);
// Method | Difficulty Prompting Strategy | Difficulty Matching | Avg. Score | N, for TCC and CC.
Table strategy_table(std::span<const RunRecord> records);

std::string to_csv(const Table& table);
std::string to_markdown(const Table& table);

struct Series {
    std::string name;
    std::vector<std::string> x;
    std::vector<double> y;
    std::vector<std::size_t> n;
};

struct Panel {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool bars = false;
    std::vector<std::string> categories;  // x axis, in display order
    std::vector<Series> series;
};

struct Figure {
    std::string name;  // file stem
    std::string title;
    std::vector<Panel> panels;
};

Figure difficulty_figure(std::span<const RunRecord> records);
Figure rounds_figure(std::span<const RunRecord> records);
Figure agents_figure(std::span<const RunRecord> records);
Figure agent_rounds_figure(std::span<const RunRecord> records);
Figure histogram_figure(std::span<const RunRecord> records);
std::vector<Figure> all_figures(std::span<const RunRecord> records);

// Plotted marks carry data-panel/-series/-x/-value attributes that repeat the
// sidecar text exactly.
std::string render_svg(const Figure& figure);
std::string figure_data_csv(const Figure& figure);
// Text used for every plotted value in both the SVG and the sidecar.
std::string format_value(double value);

struct ReportFiles {
    std::vector<std::filesystem::path> tables;
    std::vector<std::filesystem::path> figures;
    std::vector<std::filesystem::path> data;
};

ReportFiles report_tables(std::span<const RunRecord> records, const std::filesystem::path& out_dir);
ReportFiles report_plots(std::span<const RunRecord> records, const std::filesystem::path& out_dir);
ReportFiles report(std::span<const RunRecord> records, const std::filesystem::path& out_dir);

}  // namespace mathgen
