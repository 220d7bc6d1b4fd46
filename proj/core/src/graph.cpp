#include "bunforge/graph.hpp"

#include "bunforge/csv.hpp"
#include "bunforge/error.hpp"

#include <algorithm>
#include <numeric>

namespace bunforge {

UserGraph UserGraph::assemble(std::uint64_t week, std::vector<UserId> ids,
                              std::vector<std::pair<NodeIndex, NodeIndex>> edges) {
    std::erase_if(edges, [](const auto& e) { return e.first == e.second; });
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    UserGraph g;
    g.week_ = week;
    g.ids_ = std::move(ids);
    const std::size_t n = g.ids_.size();

    g.out_offsets_.assign(n + 1, 0);
    g.in_offsets_.assign(n + 1, 0);
    for (const auto& [u, v] : edges) {
        ++g.out_offsets_[u + 1];
        ++g.in_offsets_[v + 1];
    }
    std::partial_sum(g.out_offsets_.begin(), g.out_offsets_.end(), g.out_offsets_.begin());
    std::partial_sum(g.in_offsets_.begin(), g.in_offsets_.end(), g.in_offsets_.begin());

    // Edges are sorted by (src, dst), so out-lists come out sorted directly.
    g.out_targets_.resize(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) g.out_targets_[i] = edges[i].second;

    // Filling in-lists while scanning sources in order keeps them sorted too.
    g.in_sources_.resize(edges.size());
    std::vector<std::size_t> fill(g.in_offsets_.begin(), g.in_offsets_.end() - 1);
    for (const auto& [u, v] : edges) g.in_sources_[fill[v]++] = u;
    return g;
}

UserGraph UserGraph::from_users(std::uint64_t week, std::vector<UserId> nodes, std::vector<UserEdge> edges) {
    nodes.reserve(nodes.size() + 2 * edges.size());
    for (const auto& e : edges) {
        nodes.push_back(e.src);
        nodes.push_back(e.dst);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    if (nodes.size() > std::numeric_limits<NodeIndex>::max()) {
        throw Error(ErrorCode::InvalidRecord, "too many users for one snapshot");
    }
    auto local = [&nodes](UserId id) {
        return static_cast<NodeIndex>(std::lower_bound(nodes.begin(), nodes.end(), id) - nodes.begin());
    };
    std::vector<std::pair<NodeIndex, NodeIndex>> local_edges;
    local_edges.reserve(edges.size());
    for (const auto& e : edges) local_edges.emplace_back(local(e.src), local(e.dst));
    edges.clear();
    edges.shrink_to_fit();
    return assemble(week, std::move(nodes), std::move(local_edges));
}

UserGraph UserGraph::from_indices(std::size_t n, std::span<const std::pair<NodeIndex, NodeIndex>> edges,
                                  std::uint64_t week) {
    std::vector<UserId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = UserId{i};
    for (const auto& [u, v] : edges) {
        if (u >= n || v >= n) throw Error(ErrorCode::InvalidRecord, "edge endpoint out of range");
    }
    return assemble(week, std::move(ids), {edges.begin(), edges.end()});
}

std::optional<NodeIndex> UserGraph::index_of(UserId id) const {
    const auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) return std::nullopt;
    return static_cast<NodeIndex>(it - ids_.begin());
}

UserGraph UserGraph::reversed() const {
    std::vector<std::pair<NodeIndex, NodeIndex>> edges;
    edges.reserve(edge_count());
    for_each_edge([&](NodeIndex u, NodeIndex v) { edges.emplace_back(v, u); });
    return assemble(week_, ids_, std::move(edges));
}

std::string_view to_string(SnapshotMode mode) noexcept {
    return mode == SnapshotMode::Cumulative ? "cumulative" : "weekly";
}

SnapshotMode parse_snapshot_mode(std::string_view text) {
    if (text == "cumulative") return SnapshotMode::Cumulative;
    if (text == "weekly") return SnapshotMode::Weekly;
    throw Error(ErrorCode::InvalidConfig, "mode must be cumulative or weekly, got '" + std::string(text) + "'");
}

namespace {

UserId resolve(const ClusterState& state, const std::string& address, const std::string& txid) {
    const auto idx = state.index_of(address);
    if (!idx) {
        throw Error(ErrorCode::StateMismatch,
                    "address '" + address + "' of tx " + txid + " is unknown to the cluster state");
    }
    return state.find_user(*idx);
}

}  // namespace

void SnapshotBuilder::add_transaction(const TxRecord& tx, const ClusterState& state) {
    if (tx.is_coinbase()) {
        for (const auto& out : tx.outputs) nodes_.push_back(resolve(state, out.address, tx.txid));
        return;
    }
    const UserId sender = resolve(state, tx.inputs.front().address, tx.txid);
    nodes_.push_back(sender);
    for (std::size_t i = 1; i < tx.inputs.size(); ++i) resolve(state, tx.inputs[i].address, tx.txid);
    const auto change = change_output_index(tx);
    for (std::size_t i = 0; i < tx.outputs.size(); ++i) {
        const UserId recipient = resolve(state, tx.outputs[i].address, tx.txid);
        nodes_.push_back(recipient);
        if (change && *change == i) continue;
        if (recipient != sender) edges_.push_back({sender, recipient});
    }
}

void SnapshotBuilder::compact() {
    std::sort(nodes_.begin(), nodes_.end());
    nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
}

void SnapshotBuilder::merge(const SnapshotBuilder& other) {
    nodes_.insert(nodes_.end(), other.nodes_.begin(), other.nodes_.end());
    edges_.insert(edges_.end(), other.edges_.begin(), other.edges_.end());
}

UserGraph SnapshotBuilder::build(std::uint64_t week) const {
    return UserGraph::from_users(week, nodes_, edges_);
}

UserGraph build_snapshot(std::span<const TxRecord> txs, const ClusterState& state, SnapshotMode mode,
                         std::uint64_t week) {
    SnapshotBuilder builder;
    for (const auto& tx : txs) {
        const bool in_window = mode == SnapshotMode::Cumulative ? tx.week <= week : tx.week == week;
        if (in_window) builder.add_transaction(tx, state);
    }
    return builder.build(week);
}

std::uint64_t PatternHistogram::total() const noexcept {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

PatternHistogram pattern_histogram(std::span<const TxRecord> txs) {
    PatternHistogram h;
    for (const auto& tx : txs) h.add(tx);
    return h;
}

std::size_t degree_filter_count(const UserGraph& g, std::size_t k) {
    std::size_t count = 0;
    for (NodeIndex v = 0; v < g.node_count(); ++v) {
        if (g.in_degree(v) + g.out_degree(v) > k) ++count;
    }
    return count;
}

void write_edge_csv(const UserGraph& g, const std::filesystem::path& path) {
    csv::Writer out(path);
    out.row({"week", "src_user", "dst_user"});
    g.for_each_edge([&](NodeIndex u, NodeIndex v) {
        out.field(g.week()).field(g.id(u).value).field(g.id(v).value).end_row();
    });
    out.close();
}

void write_degree_csv(const UserGraph& g, const std::filesystem::path& path) {
    csv::Writer out(path);
    out.row({"week", "user", "in_deg", "out_deg"});
    for (NodeIndex v = 0; v < g.node_count(); ++v) {
        out.field(g.week())
            .field(g.id(v).value)
            .field(static_cast<std::uint64_t>(g.in_degree(v)))
            .field(static_cast<std::uint64_t>(g.out_degree(v)))
            .end_row();
    }
    out.close();
}

UserGraph read_graph_csv(const std::filesystem::path& edges_path, const std::filesystem::path& degrees_path) {
    const csv::Table degrees = csv::read_table(degrees_path);
    const csv::Table edges = csv::read_table(edges_path);
    const auto d_week = degrees.column("week");
    const auto d_user = degrees.column("user");
    const auto e_week = edges.column("week");
    const auto e_src = edges.column("src_user");
    const auto e_dst = edges.column("dst_user");
    if (!d_week || !d_user || !e_week || !e_src || !e_dst) {
        throw Error(ErrorCode::SchemaMismatch, "graph CSV header mismatch in " + edges_path.string());
    }
    std::optional<std::uint64_t> week;
    auto check_week = [&](const std::string& text) {
        const auto w = csv::parse_u64(text);
        if (week && *week != w) throw Error(ErrorCode::SchemaMismatch, "mixed weeks in graph CSV");
        week = w;
    };
    std::vector<UserId> nodes;
    nodes.reserve(degrees.rows.size());
    for (const auto& row : degrees.rows) {
        check_week(row.at(*d_week));
        nodes.push_back(UserId{csv::parse_u64(row.at(*d_user))});
    }
    std::vector<UserEdge> list;
    list.reserve(edges.rows.size());
    for (const auto& row : edges.rows) {
        check_week(row.at(*e_week));
        list.push_back({UserId{csv::parse_u64(row.at(*e_src))}, UserId{csv::parse_u64(row.at(*e_dst))}});
    }
    return UserGraph::from_users(week.value_or(0), std::move(nodes), std::move(list));
}

}  // namespace bunforge
