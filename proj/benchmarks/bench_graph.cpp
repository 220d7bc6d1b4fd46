#include "bunforge/components.hpp"
#include "bunforge/graph.hpp"
#include "bunforge/metrics.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace bunforge;

namespace {

// Sparse random digraph with average out-degree 3 plus a long back-linked
// chain so strong components are non-trivial.
UserGraph random_graph(std::size_t n) {
    std::mt19937_64 rng(42);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    edges.reserve(4 * n);
    for (std::size_t i = 0; i < 3 * n; ++i) {
        edges.emplace_back(static_cast<std::uint32_t>(rng() % n), static_cast<std::uint32_t>(rng() % n));
    }
    for (std::uint32_t i = 1; i < n; ++i) edges.emplace_back(i - 1, i);
    return UserGraph::from_indices(n, edges);
}

void BM_Scc(benchmark::State& state) {
    const auto g = random_graph(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(strong_component_labels(g).count);
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * g.edge_count()));
}
BENCHMARK(BM_Scc)->Arg(100'000)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_Wcc(benchmark::State& state) {
    const auto g = random_graph(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(weak_component_labels(g).count);
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * g.edge_count()));
}
BENCHMARK(BM_Wcc)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_PageRank(benchmark::State& state) {
    const auto g = random_graph(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(pagerank(g).iterations);
}
BENCHMARK(BM_PageRank)->Arg(100'000)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_Hits(benchmark::State& state) {
    const auto g = random_graph(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(hits(g).iterations);
}
BENCHMARK(BM_Hits)->Arg(100'000)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_Assortativity(benchmark::State& state) {
    const auto g = random_graph(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(assortativity_quad(g).out_in);
}
BENCHMARK(BM_Assortativity)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

}  // namespace
