#pragma once

#include "bunforge/clustering.hpp"
#include "bunforge/tx_record.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace bunforge {

using NodeIndex = std::uint32_t;

struct UserEdge {
    UserId src;
    UserId dst;

    friend auto operator<=>(const UserEdge&, const UserEdge&) = default;
};

/// Immutable directed unweighted user graph for one week. Nodes are stored
/// sorted by UserId and addressed by dense NodeIndex; adjacency is CSR in both
/// directions. No self-loops, no parallel edges.
class UserGraph {
  public:
    UserGraph() = default;

    /// Builds from user-level data. Edge endpoints are added to the node set;
    /// duplicate edges collapse and self-loops are dropped.
    static UserGraph from_users(std::uint64_t week, std::vector<UserId> nodes, std::vector<UserEdge> edges);

    /// Builds directly from local indices; `edges` may be unsorted and contain
    /// duplicates. Node ids default to 0..n-1.
    static UserGraph from_indices(std::size_t n, std::span<const std::pair<NodeIndex, NodeIndex>> edges,
                                  std::uint64_t week = 0);

    [[nodiscard]] std::uint64_t week() const noexcept { return week_; }
    [[nodiscard]] std::size_t node_count() const noexcept { return ids_.size(); }
    [[nodiscard]] std::size_t edge_count() const noexcept { return out_targets_.size(); }
    [[nodiscard]] bool empty() const noexcept { return ids_.empty(); }

    [[nodiscard]] UserId id(NodeIndex v) const { return ids_[v]; }
    [[nodiscard]] std::span<const UserId> ids() const noexcept { return ids_; }
    [[nodiscard]] std::optional<NodeIndex> index_of(UserId id) const;

    [[nodiscard]] std::span<const NodeIndex> out_neighbors(NodeIndex v) const {
        return {out_targets_.data() + out_offsets_[v], out_targets_.data() + out_offsets_[v + 1]};
    }
    [[nodiscard]] std::span<const NodeIndex> in_neighbors(NodeIndex v) const {
        return {in_sources_.data() + in_offsets_[v], in_sources_.data() + in_offsets_[v + 1]};
    }
    [[nodiscard]] std::size_t out_degree(NodeIndex v) const { return out_offsets_[v + 1] - out_offsets_[v]; }
    [[nodiscard]] std::size_t in_degree(NodeIndex v) const { return in_offsets_[v + 1] - in_offsets_[v]; }

    /// Edges in (src, dst) index order.
    template <typename F>
    void for_each_edge(F&& f) const {
        for (NodeIndex u = 0; u < ids_.size(); ++u) {
            for (const NodeIndex v : out_neighbors(u)) f(u, v);
        }
    }

    /// Same graph with every edge reversed.
    [[nodiscard]] UserGraph reversed() const;

  private:
    static UserGraph assemble(std::uint64_t week, std::vector<UserId> ids,
                              std::vector<std::pair<NodeIndex, NodeIndex>> edges);

    std::uint64_t week_ = 0;
    std::vector<UserId> ids_;
    std::vector<std::size_t> out_offsets_{0};
    std::vector<NodeIndex> out_targets_;
    std::vector<std::size_t> in_offsets_{0};
    std::vector<NodeIndex> in_sources_;
};

enum class SnapshotMode { Cumulative, Weekly };

std::string_view to_string(SnapshotMode mode) noexcept;
SnapshotMode parse_snapshot_mode(std::string_view text);

/// Accumulates the user-level nodes and edges contributed by transactions.
/// Edge rule: sender = user of the first input; every non-change output whose
/// user differs from the sender yields sender -> recipient. Coinbase outputs
/// only contribute nodes.
class SnapshotBuilder {
  public:
    /// Throws Error(StateMismatch) if an address of `tx` is unknown to `state`.
    void add_transaction(const TxRecord& tx, const ClusterState& state);
    void merge(const SnapshotBuilder& other);

    /// Sorts and deduplicates in place; call before building or merging for
    /// bounded memory.
    void compact();

    [[nodiscard]] UserGraph build(std::uint64_t week) const;

  private:
    std::vector<UserId> nodes_;
    std::vector<UserEdge> edges_;
};

/// Snapshot for week `week` from every transaction in `txs`: cumulative mode
/// takes all records with tx.week <= week, weekly mode only tx.week == week.
/// Users are resolved against `state` as given.
UserGraph build_snapshot(std::span<const TxRecord> txs, const ClusterState& state, SnapshotMode mode,
                         std::uint64_t week);

struct PatternHistogram {
    std::array<std::uint64_t, 4> counts{};

    [[nodiscard]] std::uint64_t operator[](TxPattern p) const noexcept {
        return counts[static_cast<std::size_t>(p)];
    }
    [[nodiscard]] std::uint64_t total() const noexcept;
    void add(const TxRecord& tx) noexcept { ++counts[static_cast<std::size_t>(classify_pattern(tx))]; }
};

PatternHistogram pattern_histogram(std::span<const TxRecord> txs);

/// Number of nodes with in_degree + out_degree > k.
std::size_t degree_filter_count(const UserGraph& g, std::size_t k);

/// CSV `week,src_user,dst_user` with header.
void write_edge_csv(const UserGraph& g, const std::filesystem::path& path);
/// CSV `week,user,in_deg,out_deg` with header; one row per node.
void write_degree_csv(const UserGraph& g, const std::filesystem::path& path);
/// Reloads a graph written by the two functions above.
UserGraph read_graph_csv(const std::filesystem::path& edges, const std::filesystem::path& degrees);

}  // namespace bunforge
