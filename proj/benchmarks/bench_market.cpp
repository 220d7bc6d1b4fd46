#include "bunforge/market.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace bunforge;

namespace {

void BM_WilcoxonExact(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(7);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> b(n), a(n);
    for (std::size_t i = 0; i < n; ++i) {
        b[i] = z(rng);
        a[i] = z(rng);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(wilcoxon_signed_rank(b, a, 0.05, WilcoxonMethod::Exact).p_value);
    }
}
BENCHMARK(BM_WilcoxonExact)->Arg(7)->Arg(25);

void BM_Vol1Day(benchmark::State& state) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z(0.0, 5e-4);
    std::vector<double> closes{100.0};
    for (std::size_t i = 0; i < kMinutesPerDay; ++i) closes.push_back(closes.back() * std::exp(z(rng)));
    for (auto _ : state) benchmark::DoNotOptimize(vol1(closes).value);
}
BENCHMARK(BM_Vol1Day);

void BM_RollingSweep(benchmark::State& state) {
    std::mt19937_64 rng(9);
    std::lognormal_distribution<double> v(-3.5, 0.3);
    VolSeries vols;
    for (std::int64_t d = 0; d < state.range(0); ++d) vols.days.push_back({d, v(rng), kMinutesPerDay, false});
    for (auto _ : state) benchmark::DoNotOptimize(rolling_sweep(vols).rows.size());
}
BENCHMARK(BM_RollingSweep)->Arg(3650)->Unit(benchmark::kMillisecond);

}  // namespace
