#include "bunforge/plot.hpp"

#include "bunforge/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace bunforge {

namespace {

struct KindInfo {
    FigureKind kind;
    std::string_view name;
};

constexpr std::array<KindInfo, 9> kKinds{{
    {FigureKind::Disconnected, "disconnected"},
    {FigureKind::RelativeSize, "relative-size"},
    {FigureKind::Ratio, "ratio"},
    {FigureKind::Newman, "newman"},
    {FigureKind::Growth, "growth"},
    {FigureKind::PageRankGini, "pagerank-gini"},
    {FigureKind::HitsGini, "hits-gini"},
    {FigureKind::Volatility, "volatility"},
    {FigureKind::Sweep, "sweep"},
}};

constexpr std::array<std::string_view, 6> kPalette{"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"};

std::size_t require(const csv::Table& t, std::string_view name, FigureKind kind) {
    const auto idx = t.column(name);
    if (!idx) {
        throw Error(ErrorCode::SchemaMismatch,
                    "figure '" + std::string(to_string(kind)) + "' needs column '" + std::string(name) + "'");
    }
    return *idx;
}

double cell(const csv::Table& t, std::size_t row, std::size_t col) {
    const auto& r = t.rows[row];
    if (col >= r.size()) throw Error(ErrorCode::SchemaMismatch, "short row " + std::to_string(row + 2));
    return csv::parse_double(r[col]);
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    if (v != 0.0 && (std::abs(v) >= 1e5 || std::abs(v) < 1e-3)) {
        std::snprintf(buf, sizeof buf, "%.0e", v);
    } else {
        std::snprintf(buf, sizeof buf, "%.4g", v);
    }
    return buf;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace

FigureKind parse_figure_kind(std::string_view text) {
    for (const auto& k : kKinds) {
        if (k.name == text) return k.kind;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown figure kind '" + std::string(text) + "'");
}

std::string_view to_string(FigureKind kind) noexcept {
    for (const auto& k : kKinds) {
        if (k.kind == kind) return k.name;
    }
    return "unknown";
}

Figure figure_from_table(const csv::Table& table, FigureKind kind) {
    if (table.header.empty() || table.rows.empty()) {
        throw Error(ErrorCode::SchemaMismatch, "figure '" + std::string(to_string(kind)) + "' got an empty table");
    }
    Figure fig;
    const bool by_date = kind == FigureKind::Volatility || kind == FigureKind::Sweep;
    const std::size_t xcol = by_date ? require(table, kind == FigureKind::Sweep ? "event_date" : "date", kind)
                                     : require(table, "week", kind);
    fig.x_label = by_date ? "day" : "week";

    auto x_at = [&](std::size_t row) {
        return by_date ? static_cast<double>(row) : cell(table, row, xcol);
    };
    auto column_series = [&](std::string_view name) {
        const auto col = require(table, name, kind);
        Series s;
        s.name = std::string(name);
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            s.x.push_back(x_at(r));
            s.y.push_back(cell(table, r, col));
        }
        return s;
    };
    auto ratio_series = [&](std::string name, std::string_view num_col, std::string_view den_col) {
        const auto a = require(table, num_col, kind);
        const auto b = require(table, den_col, kind);
        Series s;
        s.name = std::move(name);
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const double den = cell(table, r, b);
            s.x.push_back(x_at(r));
            s.y.push_back(den == 0.0 ? std::nan("") : cell(table, r, a) / den);
        }
        return s;
    };

    switch (kind) {
        case FigureKind::Disconnected:
            fig.title = "Disconnected components";
            fig.y_label = "components";
            fig.log_y = true;
            fig.series = {column_series("n_wcc"), column_series("n_scc")};
            break;
        case FigureKind::RelativeSize:
            fig.title = "Relative size of the largest components";
            fig.y_label = "fraction of nodes";
            fig.series = {ratio_series("lwcc/n", "lwcc", "n_nodes"), ratio_series("lscc/n", "lscc", "n_nodes")};
            break;
        case FigureKind::Ratio:
            fig.title = "Largest over second-largest component";
            fig.y_label = "ratio";
            fig.log_y = true;
            fig.series = {ratio_series("lwcc/wcc2", "lwcc", "wcc2"), ratio_series("lscc/scc2", "lscc", "scc2")};
            break;
        case FigureKind::Newman:
            fig.title = "Directed assortativity";
            fig.y_label = "r";
            fig.series = {column_series("r_out_out"), column_series("r_out_in"), column_series("r_in_out"),
                          column_series("r_in_in")};
            break;
        case FigureKind::Growth:
            fig.title = "Total and filtered nodes";
            fig.y_label = "nodes";
            fig.series = {column_series("total_nodes"), column_series("filtered_nodes")};
            break;
        case FigureKind::PageRankGini:
            fig.title = "Gini of PageRank";
            fig.y_label = "Gini";
            fig.series = {column_series("pr_gini")};
            break;
        case FigureKind::HitsGini:
            fig.title = "Gini of HITS scores";
            fig.y_label = "Gini";
            fig.series = {column_series("hits_auth_gini"), column_series("hits_hub_gini")};
            break;
        case FigureKind::Volatility:
            fig.title = "Daily volatility index";
            fig.y_label = "VOL1";
            fig.series = {column_series("vol1")};
            break;
        case FigureKind::Sweep:
            fig.title = "Rolling signed-rank p-values";
            fig.y_label = "p-value";
            fig.series = {column_series("p_value")};
            break;
    }
    return fig;
}

std::string render_svg(const Figure& figure) {
    constexpr double kWidth = 800, kHeight = 480;
    constexpr double kLeft = 80, kRight = 160, kTop = 40, kBottom = 60;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;

    auto usable = [&](double y) { return std::isfinite(y) && (!figure.log_y || y > 0.0); };
    auto ty = [&](double y) { return figure.log_y ? std::log10(y) : y; };

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : figure.series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            if (usable(s.y[i])) {
                ymin = std::min(ymin, ty(s.y[i]));
                ymax = std::max(ymax, ty(s.y[i]));
            }
        }
    }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1;
    if (!std::isfinite(ymin)) ymin = 0, ymax = 1;
    if (figure.log_y) {
        ymin = std::floor(ymin);
        ymax = std::ceil(ymax);
    }
    if (xmax == xmin) xmin -= 0.5, xmax += 0.5;
    if (ymax == ymin) ymin -= 0.5, ymax += 0.5;

    auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
    auto py = [&](double y) { return kTop + plot_h - (ty(y) - ymin) / (ymax - ymin) * plot_h; };
    auto py_raw = [&](double t) { return kTop + plot_h - (t - ymin) / (ymax - ymin) * plot_h; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << xml_escape(figure.title) << "</text>\n";
    svg << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(plot_w) << "\" height=\""
        << num(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";

    // Y ticks: decades on log axes, five even steps otherwise.
    std::vector<double> yticks;
    if (figure.log_y) {
        for (double t = ymin; t <= ymax + 1e-9; t += 1.0) yticks.push_back(t);
    } else {
        for (int i = 0; i <= 4; ++i) yticks.push_back(ymin + (ymax - ymin) * i / 4.0);
    }
    for (const double t : yticks) {
        const double y = py_raw(t);
        svg << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(y) << "\" x2=\"" << num(kLeft) << "\" y2=\""
            << num(y) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
            << tick_label(figure.log_y ? std::pow(10.0, t) : t) << "</text>\n";
    }
    for (int i = 0; i <= 4; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 4.0;
        const double x = px(xv);
        svg << "<line x1=\"" << num(x) << "\" y1=\"" << num(kTop + plot_h) << "\" x2=\"" << num(x) << "\" y2=\""
            << num(kTop + plot_h + 5) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << num(x) << "\" y=\"" << num(kTop + plot_h + 20) << "\" text-anchor=\"middle\">"
            << tick_label(xv) << "</text>\n";
    }
    svg << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(kHeight - 15)
        << "\" text-anchor=\"middle\">" << xml_escape(figure.x_label) << "</text>\n";
    svg << "<text transform=\"translate(20 " << num(kTop + plot_h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
        << xml_escape(figure.y_label) << (figure.log_y ? " (log)" : "") << "</text>\n";

    for (std::size_t k = 0; k < figure.series.size(); ++k) {
        const auto& s = figure.series[k];
        const auto colour = kPalette[k % kPalette.size()];
        svg << "<g class=\"series\" data-name=\"" << xml_escape(s.name) << "\" stroke=\"" << colour
            << "\" fill=\"none\" stroke-width=\"1.5\">\n";
        std::string points;
        auto flush = [&] {
            if (!points.empty()) svg << "<polyline points=\"" << points << "\"/>\n";
            points.clear();
        };
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!usable(s.y[i])) {
                flush();
                continue;
            }
            if (!points.empty()) points.push_back(' ');
            points += num(px(s.x[i])) + "," + num(py(s.y[i]));
        }
        flush();
        svg << "</g>\n";
        const double ly = kTop + 10 + 20.0 * static_cast<double>(k);
        svg << "<line x1=\"" << num(kWidth - kRight + 15) << "\" y1=\"" << num(ly) << "\" x2=\""
            << num(kWidth - kRight + 40) << "\" y2=\"" << num(ly) << "\" stroke=\"" << colour
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << num(kWidth - kRight + 45) << "\" y=\"" << num(ly + 4) << "\">" << xml_escape(s.name)
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void plot(const std::filesystem::path& csv_path, FigureKind kind, const std::filesystem::path& svg_path) {
    const auto figure = figure_from_table(csv::read_table(csv_path), kind);
    const std::string svg = render_svg(figure);
    std::ofstream out(svg_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + svg_path.string());
    out << svg;
    if (!out) throw Error(ErrorCode::Io, "failed writing " + svg_path.string());
}

}  // namespace bunforge
