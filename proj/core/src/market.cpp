#include "bunforge/market.hpp"

#include "bunforge/csv.hpp"
#include "bunforge/error.hpp"
#include "bunforge/http.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace bunforge {

namespace {

constexpr std::int64_t kMsPerMinute = 60'000;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

PriceSeries read_candles_csv(const std::filesystem::path& path, std::string pair) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    PriceSeries series;
    series.pair = std::move(pair);
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = csv::split_line(line);
        if (line_no == 1 && !fields.empty() && !fields[0].empty() &&
            !std::isdigit(static_cast<unsigned char>(fields[0][0]))) {
            continue;  // header
        }
        if (fields.size() < 5) {
            throw Error(ErrorCode::SchemaMismatch, path.string() + ":" + std::to_string(line_no) +
                                                       ": expected timestamp_ms,open,high,low,close,volume");
        }
        const auto ms = static_cast<std::int64_t>(csv::parse_u64(fields[0]));
        const double close = csv::parse_double(fields[4]);
        if (!(close > 0.0) || !std::isfinite(close)) {
            throw Error(ErrorCode::InvalidRecord, path.string() + ":" + std::to_string(line_no) +
                                                      ": close must be positive");
        }
        const std::int64_t minute = floor_div(ms, kMsPerMinute);
        if (!series.points.empty() && minute <= series.points.back().minute) {
            throw Error(ErrorCode::InvalidRecord, path.string() + ":" + std::to_string(line_no) +
                                                      ": timestamps must strictly increase by minute");
        }
        series.points.push_back({minute, close});
    }
    return series;
}

void write_candles_csv(const PriceSeries& series, const std::filesystem::path& path) {
    csv::Writer out(path);
    out.row({"timestamp_ms", "open", "high", "low", "close", "volume"});
    for (const auto& p : series.points) {
        const auto close = csv::format_double(p.close);
        out.field(static_cast<std::uint64_t>(p.minute * kMsPerMinute))
            .field(close)
            .field(close)
            .field(close)
            .field(close)
            .field("0")
            .end_row();
    }
    out.close();
}

Vol1Result vol1(std::span<const double> closes, const Vol1Options& options) {
    if (closes.size() < 3) {
        throw Error(ErrorCode::InsufficientSamples,
                    "need at least two log-returns, got " + std::to_string(closes.size() ? closes.size() - 1 : 0));
    }
    const std::size_t n = closes.size() - 1;
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(closes[i] > 0.0) || !(closes[i + 1] > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "prices must be positive");
        }
        r[i] = std::log(closes[i + 1] / closes[i]);
    }
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (const double x : r) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    Vol1Result out;
    out.n_samples = n;
    const double needed = options.min_coverage * static_cast<double>(options.expected_returns);
    if (static_cast<double>(n) < needed) {
        out.flagged = true;
        out.value = sd * std::sqrt(static_cast<double>(n));
    } else {
        out.value = sd * std::sqrt(static_cast<double>(options.expected_returns));
    }
    return out;
}

VolSeries daily_vol1(const PriceSeries& series, const Vol1Options& options) {
    VolSeries out;
    if (series.points.empty()) return out;
    const auto day_of = [](std::int64_t minute) {
        return floor_div(minute, static_cast<std::int64_t>(kMinutesPerDay));
    };
    const std::int64_t first_day = day_of(series.points.front().minute);
    const std::int64_t last_day = day_of(series.points.back().minute);

    std::size_t i = 0;
    std::vector<double> closes;
    for (std::int64_t day = first_day; day <= last_day; ++day) {
        closes.clear();
        if (i > 0) closes.push_back(series.points[i - 1].close);  // previous day's final close
        while (i < series.points.size() && day_of(series.points[i].minute) == day) {
            closes.push_back(series.points[i].close);
            ++i;
        }
        VolDay vd;
        vd.day = day;
        if (closes.size() < 3) {
            vd.vol1 = std::nan("");
            vd.n_samples = closes.empty() ? 0 : closes.size() - 1;
            vd.flagged = true;
        } else {
            const auto r = vol1(closes, options);
            vd.vol1 = r.value;
            vd.n_samples = r.n_samples;
            vd.flagged = r.flagged;
        }
        out.days.push_back(vd);
    }
    return out;
}

namespace {

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x_before, std::span<const double> x_after,
                                    double alpha, WilcoxonMethod method) {
    if (x_before.size() != x_after.size() || x_before.empty()) {
        throw Error(ErrorCode::InvalidArgument, "signed-rank test needs two equal, non-empty samples");
    }
    struct Diff {
        double magnitude;
        bool positive;
    };
    std::vector<Diff> diffs;
    for (std::size_t i = 0; i < x_before.size(); ++i) {
        const double d = x_before[i] - x_after[i];
        if (!std::isfinite(d)) throw Error(ErrorCode::InvalidArgument, "non-finite difference");
        if (d != 0.0) diffs.push_back({std::abs(d), d > 0.0});
    }

    WilcoxonResult res;
    res.n_pairs = diffs.size();
    if (diffs.empty()) {
        res.all_zero = true;
        res.p_value = 1.0;
        res.reject = false;
        return res;
    }
    const std::size_t n = diffs.size();
    std::sort(diffs.begin(), diffs.end(), [](const Diff& a, const Diff& b) { return a.magnitude < b.magnitude; });

    // Doubled average ranks are integers: a tie group occupying 1-based ranks
    // [lo, hi] gets doubled rank lo + hi.
    std::vector<std::uint32_t> rank2(n);
    double tie_term = 0.0;  // sum of t^3 - t over tie groups
    for (std::size_t lo = 0; lo < n;) {
        std::size_t hi = lo;
        while (hi + 1 < n && diffs[hi + 1].magnitude == diffs[lo].magnitude) ++hi;
        const auto r2 = static_cast<std::uint32_t>((lo + 1) + (hi + 1));
        for (std::size_t k = lo; k <= hi; ++k) rank2[k] = r2;
        const auto t = static_cast<double>(hi - lo + 1);
        tie_term += t * t * t - t;
        lo = hi + 1;
    }
    std::uint64_t w2 = 0;  // doubled W+
    for (std::size_t k = 0; k < n; ++k) {
        if (diffs[k].positive) w2 += rank2[k];
    }
    res.statistic = static_cast<double>(w2) / 2.0;

    const bool exact = method == WilcoxonMethod::Exact ||
                       (method == WilcoxonMethod::Auto && n <= kExactWilcoxonLimit);
    if (exact) {
        res.method = WilcoxonMethod::Exact;
        // Distribution of the doubled positive-rank sum under random signs.
        const std::uint64_t total2 = std::accumulate(rank2.begin(), rank2.end(), std::uint64_t{0});
        std::vector<double> count(total2 + 1, 0.0);
        count[0] = 1.0;
        std::uint64_t reach = 0;
        for (const auto r2 : rank2) {
            for (std::uint64_t s = reach + 1; s-- > 0;) {
                if (count[s] != 0.0) count[s + r2] += count[s];
            }
            reach += r2;
        }
        const double all = std::ldexp(1.0, static_cast<int>(n));
        double lower = 0.0;
        double upper = 0.0;
        for (std::uint64_t s = 0; s <= total2; ++s) {
            if (s <= w2) lower += count[s];
            if (s >= w2) upper += count[s];
        }
        res.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / all);
    } else {
        res.method = WilcoxonMethod::Normal;
        const auto nd = static_cast<double>(n);
        const double mean = nd * (nd + 1.0) / 4.0;
        const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
        if (var <= 0.0) {
            res.p_value = 1.0;
        } else {
            const double dev = std::max(0.0, std::abs(res.statistic - mean) - 0.5);
            res.p_value = std::min(1.0, 2.0 * normal_sf(dev / std::sqrt(var)));
        }
    }
    res.reject = res.p_value < alpha;
    return res;
}

SweepResult rolling_sweep(const VolSeries& vols, std::size_t window, double alpha) {
    const std::size_t total = vols.days.size();
    if (window == 0) throw Error(ErrorCode::InvalidArgument, "window must be positive");
    if (total < 2 * window + 1) {
        throw Error(ErrorCode::SpanTooShort, "sweep needs " + std::to_string(2 * window + 1) +
                                                 " days, series has " + std::to_string(total));
    }
    SweepResult out;
    out.rows.reserve(total - 2 * window);
    std::vector<double> before;
    std::vector<double> after;
    for (std::size_t d = window; d + window < total; ++d) {
        before.clear();
        after.clear();
        for (std::size_t k = 1; k <= window; ++k) {
            const auto& b = vols.days[d - k];
            const auto& a = vols.days[d + k];
            if (b.flagged || a.flagged) continue;
            before.push_back(b.vol1);
            after.push_back(a.vol1);
        }
        SweepRow row;
        row.day = vols.days[d].day;
        if (!before.empty()) {
            const auto w = wilcoxon_signed_rank(before, after, alpha);
            row.p_value = w.p_value;
            row.reject = w.reject;
            row.n_pairs = w.n_pairs;
        }
        out.rows.push_back(row);
    }
    return out;
}

int year_of(std::int64_t day) {
    using namespace std::chrono;
    const year_month_day ymd{sys_days{days{day}}};
    return static_cast<int>(ymd.year());
}

std::string format_date(std::int64_t day) {
    using namespace std::chrono;
    const year_month_day ymd{sys_days{days{day}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::vector<YearStats> yearly_stats(const VolSeries& vols) {
    std::map<int, std::vector<double>> by_year;
    for (const auto& d : vols.days) {
        if (!d.flagged && std::isfinite(d.vol1)) by_year[year_of(d.day)].push_back(d.vol1);
    }
    if (by_year.empty()) throw Error(ErrorCode::InvalidArgument, "no usable volatility days");
    std::vector<YearStats> out;
    for (const auto& [year, values] : by_year) {
        YearStats s;
        s.year = year;
        s.count = values.size();
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        s.min = *lo;
        s.max = *hi;
        s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.count);
        if (s.count == 1) {
            s.degenerate = true;
            s.std = 0.0;
        } else {
            double ss = 0.0;
            for (const double v : values) ss += (v - s.mean) * (v - s.mean);
            s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
        }
        out.push_back(s);
    }
    return out;
}

void write_vol_csv(const VolSeries& vols, const std::filesystem::path& path) {
    csv::Writer out(path);
    out.row({"date", "vol1", "n_samples", "flagged"});
    for (const auto& d : vols.days) {
        out.field(format_date(d.day))
            .field(d.vol1)
            .field(static_cast<std::uint64_t>(d.n_samples))
            .field(d.flagged ? "1" : "0")
            .end_row();
    }
    out.close();
}

void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path) {
    csv::Writer out(path);
    out.row({"event_date", "p_value", "h", "n_pairs"});
    for (const auto& r : sweep.rows) {
        out.field(format_date(r.day))
            .field(r.p_value)
            .field(r.reject ? "1" : "0")
            .field(static_cast<std::uint64_t>(r.n_pairs))
            .end_row();
    }
    out.close();
}

void write_stats_csv(std::span<const YearStats> stats, const std::filesystem::path& path) {
    csv::Writer out(path);
    out.row({"year", "max", "mean", "std", "min", "n_days"});
    for (const auto& s : stats) {
        out.field(static_cast<std::uint64_t>(s.year))
            .field(s.max)
            .field(s.mean)
            .field(s.std)
            .field(s.min)
            .field(static_cast<std::uint64_t>(s.count))
            .end_row();
    }
    out.close();
}

PriceSeries fetch_candles(const std::string& base_url, const std::string& symbol, std::int64_t start_ms,
                          std::int64_t end_ms, std::chrono::milliseconds timeout) {
    if (start_ms > end_ms) throw Error(ErrorCode::InvalidRange, "start after end");
    HttpEndpoint endpoint(base_url, timeout);
    PriceSeries series;
    series.pair = symbol;
    std::int64_t cursor = start_ms;
    while (cursor <= end_ms) {
        const std::string target = "/api/v3/klines?symbol=" + symbol + "&interval=1m&startTime=" +
                                   std::to_string(cursor) + "&endTime=" + std::to_string(end_ms) +
                                   "&limit=1000";
        const auto res = endpoint.get(target);
        if (res.status != 200) {
            throw Error(ErrorCode::RpcFailure, "klines: HTTP " + std::to_string(res.status));
        }
        const auto body = nlohmann::json::parse(res.body, nullptr, false);
        if (!body.is_array()) throw Error(ErrorCode::RpcFailure, "klines: expected a JSON array");
        if (body.empty()) break;
        for (const auto& k : body) {
            const auto open_ms = k.at(0).get<std::int64_t>();
            const double close = std::stod(k.at(4).get<std::string>());
            const std::int64_t minute = floor_div(open_ms, kMsPerMinute);
            if (series.points.empty() || minute > series.points.back().minute) {
                series.points.push_back({minute, close});
            }
        }
        const std::int64_t next = (series.points.back().minute + 1) * kMsPerMinute;
        if (next <= cursor) break;
        cursor = next;
    }
    return series;
}

}  // namespace bunforge
