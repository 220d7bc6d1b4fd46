#include "bunforge/clustering.hpp"
#include "bunforge/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace bunforge;

namespace {

std::vector<TxRecord> stream(std::uint64_t n_tx) {
    SyntheticConfig cfg;
    cfg.n_tx = n_tx;
    SyntheticSource src(cfg);
    std::vector<TxRecord> out;
    while (auto tx = src.next()) out.push_back(std::move(*tx));
    return out;
}

void BM_ClusterReplay(benchmark::State& state) {
    const auto txs = stream(static_cast<std::uint64_t>(state.range(0)));
    for (auto _ : state) {
        ClusterState s;
        for (const auto& tx : txs) s.apply_transaction(tx);
        benchmark::DoNotOptimize(s.user_count());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_ClusterReplay)->Arg(10'000)->Arg(100'000)->Unit(benchmark::kMillisecond);

void BM_SyntheticStream(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(stream(static_cast<std::uint64_t>(state.range(0))).size());
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_SyntheticStream)->Arg(100'000)->Unit(benchmark::kMillisecond);

}  // namespace
