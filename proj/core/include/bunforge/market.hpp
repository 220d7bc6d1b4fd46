#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace bunforge {

inline constexpr std::size_t kMinutesPerDay = 1440;

struct PricePoint {
    std::int64_t minute = 0;  // minutes since the Unix epoch (UTC)
    double close = 0.0;
};

struct PriceSeries {
    std::string pair;
    std::vector<PricePoint> points;  // strictly increasing minutes, closes > 0
};

/// Reads one-minute candles `timestamp_ms,open,high,low,close,volume`. A
/// header row is optional; rows must be strictly increasing in time.
PriceSeries read_candles_csv(const std::filesystem::path& path, std::string pair);

/// Writes candles back in the same layout (open/high/low/volume are not kept,
/// so close is repeated and volume is 0).
void write_candles_csv(const PriceSeries& series, const std::filesystem::path& path);

struct Vol1Options {
    std::size_t expected_returns = kMinutesPerDay;
    double min_coverage = 0.9;
};

struct Vol1Result {
    double value = 0.0;
    std::size_t n_samples = 0;  // log-returns used
    bool flagged = false;       // coverage below min_coverage
};

/// Daily volatility from consecutive closes, the first being the previous
/// day's final close: sample standard deviation (n - 1 denominator) of the
/// log-returns ln(P[i+1] / P[i]), times sqrt(expected_returns). Below the
/// coverage threshold the scale is sqrt(n) instead and the result is flagged.
/// Throws Error(InsufficientSamples) with fewer than two returns.
Vol1Result vol1(std::span<const double> closes, const Vol1Options& options = {});

struct VolDay {
    std::int64_t day = 0;  // days since the Unix epoch (UTC)
    double vol1 = 0.0;     // NaN when the day has no usable data
    std::size_t n_samples = 0;
    bool flagged = false;  // excluded from sweeps
};

struct VolSeries {
    std::vector<VolDay> days;  // one entry per consecutive calendar day
};

/// Groups a minute series by UTC day, anchoring each day on the last close
/// before it. Calendar days without data appear as flagged entries.
VolSeries daily_vol1(const PriceSeries& series, const Vol1Options& options = {});

enum class WilcoxonMethod { Auto, Exact, Normal };

struct WilcoxonResult {
    double p_value = 1.0;
    bool reject = false;        // h: p_value < alpha
    std::size_t n_pairs = 0;    // pairs with non-zero difference
    double statistic = 0.0;     // W+, sum of ranks of positive differences
    WilcoxonMethod method = WilcoxonMethod::Exact;
    bool all_zero = false;      // every difference was zero; test undefined
};

inline constexpr std::size_t kExactWilcoxonLimit = 25;

/// Two-sided Wilcoxon signed-rank test on the paired differences
/// x_before[i] - x_after[i]. Zero differences are dropped; tied magnitudes get
/// average ranks. Auto uses the exact null distribution up to 25 non-zero
/// pairs and the tie-corrected normal approximation above.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x_before, std::span<const double> x_after,
                                    double alpha = 0.05, WilcoxonMethod method = WilcoxonMethod::Auto);

struct SweepRow {
    std::int64_t day = 0;
    double p_value = 1.0;
    bool reject = false;
    std::size_t n_pairs = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

/// For every day D with `window` days on both sides, pairs vol[D-k] with
/// vol[D+k] for k = 1..window and runs the signed-rank test. Pairs touching a
/// flagged day are dropped. Throws Error(SpanTooShort) below 2*window+1 days.
SweepResult rolling_sweep(const VolSeries& vols, std::size_t window = 7, double alpha = 0.05);

struct YearStats {
    int year = 0;
    double max = 0.0;
    double mean = 0.0;
    double std = 0.0;  // n - 1 denominator; 0 for a single value
    double min = 0.0;
    std::size_t count = 0;
    bool degenerate = false;  // single value
};

/// Per calendar year aggregates over non-flagged days. Throws
/// Error(InvalidArgument) when no usable day exists.
std::vector<YearStats> yearly_stats(const VolSeries& vols);

/// "YYYY-MM-DD" for a day index.
std::string format_date(std::int64_t day);
int year_of(std::int64_t day);

void write_vol_csv(const VolSeries& vols, const std::filesystem::path& path);
void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path);
void write_stats_csv(std::span<const YearStats> stats, const std::filesystem::path& path);

/// Fetches one-minute klines from a Binance-compatible REST endpoint
/// (GET {base_url}/api/v3/klines), paging until `end_ms`.
PriceSeries fetch_candles(const std::string& base_url, const std::string& symbol, std::int64_t start_ms,
                          std::int64_t end_ms, std::chrono::milliseconds timeout = std::chrono::seconds(10));

}  // namespace bunforge
