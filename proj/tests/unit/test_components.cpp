#include "bunforge/components.hpp"
#include "bunforge/error.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace bunforge;

namespace {

using Sets = std::vector<std::vector<std::uint32_t>>;

Sets as_indices(const std::vector<std::vector<UserId>>& comps) {
    Sets out;
    for (const auto& c : comps) {
        std::vector<std::uint32_t> s;
        for (const auto id : c) s.push_back(static_cast<std::uint32_t>(id.value));
        out.push_back(std::move(s));
    }
    return out;
}

UserGraph graph_of(std::size_t n, const std::vector<oracle::Edge>& edges) {
    return UserGraph::from_indices(n, edges);
}

void expect_oracle(std::size_t n, const std::vector<oracle::Edge>& edges) {
    const auto g = graph_of(n, edges);
    ASSERT_EQ(as_indices(scc(g)), oracle::scc(n, edges));
    ASSERT_EQ(as_indices(wcc(g)), oracle::wcc(n, edges));
}

}  // namespace

TEST(Components, WorkedExampleSnapshot) {
    // U1=0, U2=1, U4=2 with U1->U2, U2->U1, U1->U4.
    const auto g = graph_of(3, {{0, 1}, {1, 0}, {0, 2}});
    EXPECT_EQ(as_indices(wcc(g)), (Sets{{0, 1, 2}}));
    EXPECT_EQ(as_indices(scc(g)), (Sets{{0, 1}, {2}}));
    const auto st = component_stats(g);
    EXPECT_EQ(st.n_wcc, 1U);
    EXPECT_EQ(st.lwcc_size, 3U);
    EXPECT_EQ(st.second_wcc_size, 0U);
    EXPECT_EQ(st.n_scc, 2U);
    EXPECT_EQ(st.lscc_size, 2U);
    EXPECT_EQ(st.second_scc_size, 1U);
    EXPECT_FALSE(st.wcc_ratio().has_value());
    EXPECT_DOUBLE_EQ(*st.scc_ratio(), 2.0);
}

TEST(Components, SmallShapes) {
    EXPECT_EQ(wcc(graph_of(5, {})).size(), 5U);
    EXPECT_EQ(as_indices(wcc(graph_of(6, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}}))),
              (Sets{{0, 1, 2}, {3, 4, 5}}));
    EXPECT_EQ(as_indices(scc(graph_of(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}))), (Sets{{0, 1, 2, 3}}));
    const auto st = component_stats(graph_of(4, {{0, 1}, {2, 3}}));
    EXPECT_EQ(st.n_wcc, 2U);
    EXPECT_EQ(st.lwcc_size, 2U);
    EXPECT_EQ(st.second_wcc_size, 2U);
    EXPECT_DOUBLE_EQ(*st.wcc_ratio(), 1.0);
}

TEST(Components, EmptyGraphStatsRejected) {
    try {
        component_stats(UserGraph{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyGraph);
    }
}

TEST(Components, ExhaustiveFourNodes) {
    std::vector<oracle::Edge> all;
    for (std::uint32_t u = 0; u < 4; ++u)
        for (std::uint32_t v = 0; v < 4; ++v)
            if (u != v) all.emplace_back(u, v);
    for (std::uint32_t mask = 0; mask < (1U << all.size()); ++mask) {
        std::vector<oracle::Edge> edges;
        for (std::size_t i = 0; i < all.size(); ++i)
            if (mask >> i & 1U) edges.push_back(all[i]);
        expect_oracle(4, edges);
    }
}

TEST(Components, RandomUpToFifty) {
    std::mt19937_64 rng(50);
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 1 + rng() % 50;
        const double p = std::uniform_real_distribution<double>(0.0, 3.0 / static_cast<double>(n))(rng);
        expect_oracle(n, oracle::random_digraph(rng, n, p));
    }
}

TEST(Components, StructuralInvariants) {
    std::mt19937_64 rng(51);
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = 2 + rng() % 60;
        const auto edges = oracle::random_digraph(rng, n, 1.5 / static_cast<double>(n));
        const auto g = graph_of(n, edges);
        const auto w = weak_component_labels(g);
        const auto s = strong_component_labels(g);
        // Every SCC sits inside exactly one WCC.
        std::vector<std::set<std::uint32_t>> wcc_of_scc(s.count);
        for (NodeIndex v = 0; v < n; ++v) wcc_of_scc[s.label[v]].insert(w.label[v]);
        for (const auto& ws : wcc_of_scc) EXPECT_EQ(ws.size(), 1U);
        // Tarjan labels are a reverse topological order of the condensation,
        // so every cross-component edge points to a smaller label.
        g.for_each_edge([&](NodeIndex u, NodeIndex v) {
            if (s.label[u] != s.label[v]) EXPECT_GT(s.label[u], s.label[v]);
        });
        const auto st = component_stats(g);
        EXPECT_LE(st.n_wcc, st.n_scc);
        EXPECT_GE(st.lwcc_size, st.second_wcc_size);
        EXPECT_GE(st.lscc_size, st.second_scc_size);
        EXPECT_GE(st.lwcc_relative(), 0.0);
        EXPECT_LE(st.lwcc_relative(), 1.0);
        std::size_t total = 0;
        for (const auto& c : scc(g)) total += c.size();
        EXPECT_EQ(total, n);
    }
}

TEST(Components, DeepChainDoesNotRecurse) {
    const std::size_t n = 2'000'000;
    std::vector<std::pair<NodeIndex, NodeIndex>> edges;
    edges.reserve(n);
    for (NodeIndex i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    edges.emplace_back(static_cast<NodeIndex>(n - 1), 0);
    const auto g = UserGraph::from_indices(n, edges);
    EXPECT_EQ(strong_component_labels(g).count, 1U);
    EXPECT_EQ(weak_component_labels(g).count, 1U);
}
