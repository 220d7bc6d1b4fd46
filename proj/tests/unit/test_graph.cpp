#include "bunforge/clustering.hpp"
#include "bunforge/error.hpp"
#include "bunforge/graph.hpp"
#include "bunforge/synthetic.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>

using namespace bunforge;
using namespace bunforge::testing;

namespace {

ClusterState replay_all(const std::vector<TxRecord>& txs) {
    ClusterState s;
    for (const auto& tx : txs) s.apply_transaction(tx);
    return s;
}

std::set<std::pair<std::uint64_t, std::uint64_t>> edge_set(const UserGraph& g) {
    std::set<std::pair<std::uint64_t, std::uint64_t>> out;
    g.for_each_edge([&](NodeIndex u, NodeIndex v) { out.emplace(g.id(u).value, g.id(v).value); });
    return out;
}

void expect_handshake(const UserGraph& g) {
    std::size_t in = 0, out = 0;
    for (NodeIndex v = 0; v < g.node_count(); ++v) {
        in += g.in_degree(v);
        out += g.out_degree(v);
    }
    EXPECT_EQ(in, g.edge_count());
    EXPECT_EQ(out, g.edge_count());
    g.for_each_edge([](NodeIndex u, NodeIndex v) { EXPECT_NE(u, v); });
}

}  // namespace

TEST(Snapshot, WorkedExample) {
    const auto txs = worked_example_records();
    const auto state = replay_all(txs);
    const auto g = build_snapshot(txs, state, SnapshotMode::Cumulative, 0);
    const auto u1 = state.find_user("A").value, u2 = state.find_user("B").value, u4 = state.find_user("F").value;
    EXPECT_EQ(g.node_count(), 3U);
    EXPECT_EQ(edge_set(g), (std::set<std::pair<std::uint64_t, std::uint64_t>>{{u1, u2}, {u2, u1}, {u1, u4}}));
    expect_handshake(g);
    EXPECT_EQ(degree_filter_count(g, 2), 1U);
    EXPECT_EQ(degree_filter_count(g, 0), 3U);
}

TEST(Snapshot, EmptyStream) {
    ClusterState s;
    const auto g = build_snapshot({}, s, SnapshotMode::Cumulative, 0);
    EXPECT_TRUE(g.empty());
    EXPECT_EQ(degree_filter_count(g, 2), 0U);
}

TEST(Snapshot, CoinbaseOnly) {
    const std::vector<TxRecord> txs{make_tx("cb", {}, {{"X", 50}})};
    const auto s = replay_all(txs);
    const auto g = build_snapshot(txs, s, SnapshotMode::Cumulative, 0);
    EXPECT_EQ(g.node_count(), 1U);
    EXPECT_EQ(g.edge_count(), 0U);
}

TEST(Snapshot, UnknownAddressIsStateMismatch) {
    ClusterState s;
    try {
        build_snapshot(worked_example_records(), s, SnapshotMode::Cumulative, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::StateMismatch);
    }
}

TEST(Snapshot, WeeklyVersusCumulative) {
    std::vector<TxRecord> txs{make_tx("a", {{"A", 5}}, {{"B", 4}, {"C", 1}}, 0, 0),
                              make_tx("b", {{"B", 4}}, {{"D", 3}, {"E", 1}}, 1008, 1)};
    const auto s = replay_all(txs);
    const auto weekly = build_snapshot(txs, s, SnapshotMode::Weekly, 1);
    const auto cumulative = build_snapshot(txs, s, SnapshotMode::Cumulative, 1);
    EXPECT_EQ(weekly.edge_count(), 1U);
    EXPECT_EQ(cumulative.edge_count(), 2U);
    EXPECT_EQ(weekly.week(), 1U);
}

TEST(Snapshot, CumulativeMonotoneAndHandshake) {
    SyntheticConfig c;
    c.n_tx = 6000;
    c.txs_per_block = 2;
    SyntheticSource src(c);
    std::vector<TxRecord> txs;
    while (auto tx = src.next()) txs.push_back(*tx);
    const auto s = replay_all(txs);
    ASSERT_GE(txs.back().week, 2U);
    std::set<std::uint64_t> previous;
    for (std::uint64_t w = 0; w <= txs.back().week; ++w) {
        const auto g = build_snapshot(txs, s, SnapshotMode::Cumulative, w);
        expect_handshake(g);
        std::set<std::uint64_t> nodes;
        for (const auto id : g.ids()) nodes.insert(id.value);
        EXPECT_TRUE(std::includes(nodes.begin(), nodes.end(), previous.begin(), previous.end())) << "week " << w;
        previous = std::move(nodes);
    }
}

TEST(Snapshot, EdgeSetIndependentOfTransactionOrderWithinWeek) {
    std::mt19937_64 rng(4);
    auto txs = random_stream(rng, 500, 150);
    const auto s = replay_all(txs);
    const auto a = build_snapshot(txs, s, SnapshotMode::Cumulative, 0);
    std::shuffle(txs.begin(), txs.end(), rng);
    const auto b = build_snapshot(txs, s, SnapshotMode::Cumulative, 0);
    EXPECT_EQ(edge_set(a), edge_set(b));
    EXPECT_TRUE(std::equal(a.ids().begin(), a.ids().end(), b.ids().begin(), b.ids().end()));
}

TEST(Snapshot, BuilderMergeEqualsSinglePass) {
    std::mt19937_64 rng(12);
    const auto txs = random_stream(rng, 800, 200);
    const auto s = replay_all(txs);
    SnapshotBuilder whole, left, right;
    for (std::size_t i = 0; i < txs.size(); ++i) {
        whole.add_transaction(txs[i], s);
        (i % 2 == 0 ? left : right).add_transaction(txs[i], s);
    }
    left.compact();
    right.compact();
    left.merge(right);
    EXPECT_EQ(edge_set(left.build(0)), edge_set(whole.build(0)));
}

TEST(UserGraph, FromIndicesCollapsesParallelEdgesAndLoops) {
    const std::vector<std::pair<NodeIndex, NodeIndex>> e{{0, 1}, {0, 1}, {1, 1}, {2, 0}};
    const auto g = UserGraph::from_indices(3, e);
    EXPECT_EQ(g.edge_count(), 2U);
    EXPECT_EQ(g.out_degree(0), 1U);
    EXPECT_EQ(g.in_degree(0), 1U);
    const auto r = g.reversed();
    EXPECT_EQ(r.out_degree(1), 1U);
    EXPECT_EQ(r.in_degree(2), 1U);
}

TEST(PatternHistogram, WorkedExampleAndEdgeCases) {
    const auto h = pattern_histogram(worked_example_records());
    EXPECT_EQ(h[TxPattern::OneTwo], 2U);
    EXPECT_EQ(h[TxPattern::Other], 1U);
    EXPECT_EQ(h[TxPattern::OneOne], 0U);
    EXPECT_EQ(h.total(), 3U);
    EXPECT_EQ(pattern_histogram({}).total(), 0U);

    SyntheticConfig c;
    c.n_tx = 100;
    c.mix = PatternMix::parse("1-2:1");
    SyntheticSource src(c);
    std::vector<TxRecord> txs;
    while (auto tx = src.next()) txs.push_back(*tx);
    EXPECT_EQ(pattern_histogram(txs)[TxPattern::OneTwo], 100U);
}

TEST(GraphCsv, RoundTrip) {
    ScratchDir dir("graphcsv");
    std::mt19937_64 rng(21);
    const auto txs = random_stream(rng, 300, 100);
    const auto s = replay_all(txs);
    const auto g = build_snapshot(txs, s, SnapshotMode::Cumulative, 0);
    write_edge_csv(g, dir / "e.csv");
    write_degree_csv(g, dir / "d.csv");
    const auto back = read_graph_csv(dir / "e.csv", dir / "d.csv");
    EXPECT_EQ(edge_set(back), edge_set(g));
    EXPECT_TRUE(std::equal(back.ids().begin(), back.ids().end(), g.ids().begin(), g.ids().end()));
    EXPECT_EQ(slurp(dir / "e.csv").substr(0, 22), "week,src_user,dst_user");
    EXPECT_EQ(slurp(dir / "d.csv").substr(0, 24), "week,user,in_deg,out_deg");
}
