#include "bunforge/clustering.hpp"
#include "bunforge/error.hpp"
#include "bunforge/synthetic.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace bunforge;
using namespace bunforge::testing;

namespace {

ClusterState replay_all(const std::vector<TxRecord>& txs) {
    ClusterState s;
    for (const auto& tx : txs) s.apply_transaction(tx);
    return s;
}

std::vector<std::vector<std::string>> groups(const ClusterState& s) {
    std::vector<std::vector<std::string>> out;
    for (const auto& [user, addrs] : s.snapshot_partition()) out.push_back(addrs);
    return out;
}

void expect_matches_oracle(const std::vector<TxRecord>& txs) {
    const auto state = replay_all(txs);
    const auto expected = oracle::closure_partition(txs);
    ASSERT_EQ(state.address_count(), expected.size());
    for (const auto& [addr, label] : expected) {
        ASSERT_EQ(state.find_user(addr).value, label) << addr;
    }
}

}  // namespace

TEST(Clustering, WorkedExamplePartition) {
    const auto state = replay_all(worked_example_records());
    EXPECT_EQ(groups(state), (std::vector<std::vector<std::string>>{{"A", "C", "D", "G"}, {"B", "E"}, {"F"}}));
    EXPECT_EQ(state.user_count(), 3U);
    EXPECT_EQ(state.address_count(), 7U);
}

TEST(Clustering, WorkedExampleProvisionalUserIsAbsorbed) {
    ClusterState s;
    const auto txs = worked_example_records();
    s.apply_transaction(txs[0]);
    s.apply_transaction(txs[1]);
    // After T2, D is a user of its own (the third one to appear).
    const UserId provisional = s.find_user("D");
    EXPECT_NE(provisional, s.find_user("A"));
    EXPECT_NE(provisional, s.find_user("B"));
    s.apply_transaction(txs[2]);
    EXPECT_EQ(s.find_user("D"), s.find_user("A"));
    EXPECT_EQ(s.find_user("A"), UserId{0});
    for (const auto& [user, addrs] : s.snapshot_partition()) EXPECT_NE(user, provisional);
    EXPECT_NE(s.find_user("F"), s.find_user("A"));
    EXPECT_EQ(s.snapshot_partition().at(s.find_user("F")), std::vector<std::string>{"F"});
}

TEST(Clustering, OnlyT1) {
    ClusterState s;
    s.apply_transaction(worked_example_records()[0]);
    EXPECT_EQ(groups(s), (std::vector<std::vector<std::string>>{{"A", "C"}, {"B"}}));
}

TEST(Clustering, EqualMinimumTieGoesToEarliestOutput) {
    ClusterState s;
    s.apply_transaction(make_tx("t", {{"A", 3}}, {{"B", 1}, {"C", 1}}));
    EXPECT_EQ(s.find_user("B"), s.find_user("A"));
    EXPECT_NE(s.find_user("C"), s.find_user("A"));
}

TEST(Clustering, SingleOutputAndCoinbaseDoNotMerge) {
    ClusterState s;
    s.apply_transaction(make_tx("cb", {}, {{"X", 50}, {"Y", 1}}));
    s.apply_transaction(make_tx("t", {{"X", 50}}, {{"Z", 50}}));
    EXPECT_EQ(s.user_count(), 3U);
    EXPECT_TRUE(s.merge_log().empty());
}

TEST(Clustering, ChangeCanMergeTwoExistingClusters) {
    ClusterState s;
    s.apply_transaction(make_tx("a", {{"A", 1}}, {{"B", 1}}));
    s.apply_transaction(make_tx("b", {{"A", 2}}, {{"C", 5}, {"B", 1}}));
    EXPECT_EQ(s.find_user("B"), s.find_user("A"));
}

TEST(Clustering, UnknownAddress) {
    const auto state = replay_all(worked_example_records());
    try {
        (void)state.find_user("ZZZ");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownAddress);
    }
}

TEST(Clustering, EmptyState) {
    ClusterState s;
    EXPECT_TRUE(s.snapshot_partition().empty());
    EXPECT_EQ(s.user_count(), 0U);
}

TEST(Clustering, WorkedExampleMatchesOracle) { expect_matches_oracle(worked_example_records()); }

TEST(Clustering, SyntheticStreamMatchesOracle) {
    SyntheticConfig c;
    c.n_tx = 1000;
    SyntheticSource src(c);
    std::vector<TxRecord> txs;
    while (auto tx = src.next()) txs.push_back(*tx);
    expect_matches_oracle(txs);
}

TEST(Clustering, RandomStreamsMatchOracle) {
    std::mt19937_64 rng(2024);
    for (int round = 0; round < 30; ++round) {
        const std::size_t n = 1 + rng() % 400;
        expect_matches_oracle(random_stream(rng, n, 5 + rng() % 200));
    }
    expect_matches_oracle(random_stream(rng, 10000, 3000));
}

TEST(Clustering, PermutationWithinWeekPreservesPartition) {
    std::mt19937_64 rng(77);
    for (int round = 0; round < 20; ++round) {
        auto txs = random_stream(rng, 300, 120);
        const auto base = replay_all(txs);
        std::shuffle(txs.begin(), txs.end(), rng);
        const auto shuffled = replay_all(txs);
        for (const auto& addr : base.addresses()) {
            for (const auto& other : {base.addresses().front(), base.addresses().back()}) {
                ASSERT_EQ(base.find_user(addr) == base.find_user(other),
                          shuffled.find_user(addr) == shuffled.find_user(other));
            }
        }
        ASSERT_EQ(base.user_count(), shuffled.user_count());
    }
}

TEST(Clustering, PartitionProperty) {
    std::mt19937_64 rng(3);
    const auto state = replay_all(random_stream(rng, 2000, 500));
    std::size_t covered = 0;
    std::set<std::string> seen;
    for (const auto& [user, addrs] : state.snapshot_partition()) {
        EXPECT_TRUE(std::is_sorted(addrs.begin(), addrs.end()));
        for (const auto& a : addrs) {
            EXPECT_TRUE(seen.insert(a).second) << a;
            EXPECT_EQ(state.find_user(a), user);
            // The canonical id is the smallest first-seen index of the cluster.
            EXPECT_GE(state.index_of(a).value(), user.value);
        }
        covered += addrs.size();
        EXPECT_TRUE(std::any_of(addrs.begin(), addrs.end(),
                                [&](const std::string& a) { return state.index_of(a) == user.value; }));
    }
    EXPECT_EQ(covered, state.address_count());
}

TEST(Clustering, FindIsIdempotentAndMatchesReadOnlyRoot) {
    std::mt19937_64 rng(8);
    auto state = replay_all(random_stream(rng, 1000, 300));
    for (AddressIndex i = 0; i < state.address_count(); ++i) {
        const auto before = state.find_root(i);
        const auto r = state.find(i);
        EXPECT_EQ(r, before);
        EXPECT_EQ(state.find(r), r);
    }
}

TEST(Clustering, MergeLogReplayAndDeterminism) {
    std::mt19937_64 rng(99);
    const auto txs = random_stream(rng, 3000, 800, 4);
    const auto a = replay_all(txs);
    const auto b = replay_all(txs);
    ASSERT_TRUE(std::equal(a.merge_log().begin(), a.merge_log().end(), b.merge_log().begin(), b.merge_log().end()));
    const auto replayed = ClusterState::replay(a.addresses(), a.merge_log());
    EXPECT_EQ(replayed.snapshot_partition(), a.snapshot_partition());
    // Merge weeks follow the stream and never decrease.
    EXPECT_TRUE(std::is_sorted(a.merge_log().begin(), a.merge_log().end(),
                               [](const MergeEvent& x, const MergeEvent& y) { return x.week < y.week; }));
}
