#pragma once

#include "bunforge/csv.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bunforge {

/// Figure kinds and the CSV columns each one reads:
///   disconnected   week,n_wcc,n_scc                 (log y)
///   relative-size  week,lwcc,lscc,n_nodes
///   ratio          week,lwcc,wcc2,lscc,scc2         (log y)
///   newman         week,r_out_out,r_out_in,r_in_out,r_in_in
///   growth         week,total_nodes,filtered_nodes
///   pagerank-gini  week,pr_gini
///   hits-gini      week,hits_auth_gini,hits_hub_gini
///   volatility     date,vol1
///   sweep          event_date,p_value
enum class FigureKind { Disconnected, RelativeSize, Ratio, Newman, Growth, PageRankGini, HitsGini, Volatility, Sweep };

FigureKind parse_figure_kind(std::string_view text);
std::string_view to_string(FigureKind kind) noexcept;

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;  // NaN marks a gap
};

struct Figure {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    std::vector<Series> series;
};

/// Extracts the series for `kind`; throws Error(SchemaMismatch) when columns
/// are missing or the table has no rows.
Figure figure_from_table(const csv::Table& table, FigureKind kind);

/// Self-contained SVG; identical input gives identical bytes.
std::string render_svg(const Figure& figure);

void plot(const std::filesystem::path& csv_path, FigureKind kind, const std::filesystem::path& svg_path);

}  // namespace bunforge
