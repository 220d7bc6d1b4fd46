#include "bunforge/components.hpp"

#include "bunforge/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace bunforge {

namespace {

constexpr std::uint32_t kUnvisited = std::numeric_limits<std::uint32_t>::max();

std::uint32_t root_of(std::vector<std::uint32_t>& parent, std::uint32_t v) {
    std::uint32_t r = v;
    while (parent[r] != r) r = parent[r];
    while (parent[v] != r) {
        const auto next = parent[v];
        parent[v] = r;
        v = next;
    }
    return r;
}

std::vector<std::vector<UserId>> to_sets(const UserGraph& g, const ComponentLabels& labels) {
    std::vector<std::vector<UserId>> sets(labels.count);
    // Nodes are visited in id order, so each set comes out sorted.
    for (NodeIndex v = 0; v < g.node_count(); ++v) sets[labels.label[v]].push_back(g.id(v));
    std::sort(sets.begin(), sets.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a.front() < b.front();
    });
    return sets;
}

std::pair<std::uint64_t, std::uint64_t> two_largest(const ComponentLabels& labels) {
    std::vector<std::uint64_t> sizes(labels.count, 0);
    for (const auto l : labels.label) ++sizes[l];
    std::uint64_t first = 0;
    std::uint64_t second = 0;
    for (const auto s : sizes) {
        if (s > first) {
            second = first;
            first = s;
        } else if (s > second) {
            second = s;
        }
    }
    return {first, second};
}

}  // namespace

ComponentLabels weak_component_labels(const UserGraph& g) {
    const auto n = static_cast<std::uint32_t>(g.node_count());
    std::vector<std::uint32_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0u);
    g.for_each_edge([&](NodeIndex u, NodeIndex v) {
        const auto ru = root_of(parent, u);
        const auto rv = root_of(parent, v);
        if (ru != rv) parent[std::max(ru, rv)] = std::min(ru, rv);
    });
    ComponentLabels out;
    out.label.assign(n, kUnvisited);
    std::vector<std::uint32_t> root_label(n, kUnvisited);
    for (std::uint32_t v = 0; v < n; ++v) {
        const auto r = root_of(parent, v);
        if (root_label[r] == kUnvisited) root_label[r] = out.count++;
        out.label[v] = root_label[r];
    }
    return out;
}

ComponentLabels strong_component_labels(const UserGraph& g) {
    const auto n = static_cast<std::uint32_t>(g.node_count());
    ComponentLabels out;
    out.label.assign(n, kUnvisited);

    std::vector<std::uint32_t> order(n, kUnvisited);  // discovery index
    std::vector<std::uint32_t> low(n, 0);
    std::vector<std::uint8_t> on_stack(n, 0);
    std::vector<NodeIndex> tarjan_stack;

    struct Frame {
        NodeIndex node;
        std::uint32_t next_edge;
    };
    std::vector<Frame> call_stack;
    std::uint32_t counter = 0;

    for (NodeIndex start = 0; start < n; ++start) {
        if (order[start] != kUnvisited) continue;
        order[start] = low[start] = counter++;
        tarjan_stack.push_back(start);
        on_stack[start] = 1;
        call_stack.push_back({start, 0});

        while (!call_stack.empty()) {
            Frame& frame = call_stack.back();
            const NodeIndex v = frame.node;
            const auto succ = g.out_neighbors(v);
            if (frame.next_edge < succ.size()) {
                const NodeIndex w = succ[frame.next_edge++];
                if (order[w] == kUnvisited) {
                    order[w] = low[w] = counter++;
                    tarjan_stack.push_back(w);
                    on_stack[w] = 1;
                    call_stack.push_back({w, 0});  // invalidates `frame`
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], order[w]);
                }
                continue;
            }
            // All successors done: close v.
            if (low[v] == order[v]) {
                NodeIndex w = 0;
                do {
                    w = tarjan_stack.back();
                    tarjan_stack.pop_back();
                    on_stack[w] = 0;
                    out.label[w] = out.count;
                } while (w != v);
                ++out.count;
            }
            call_stack.pop_back();
            if (!call_stack.empty()) {
                const NodeIndex parent = call_stack.back().node;
                low[parent] = std::min(low[parent], low[v]);
            }
        }
    }
    return out;
}

std::vector<std::vector<UserId>> wcc(const UserGraph& g) { return to_sets(g, weak_component_labels(g)); }

std::vector<std::vector<UserId>> scc(const UserGraph& g) { return to_sets(g, strong_component_labels(g)); }

double ComponentStats::lwcc_relative() const noexcept {
    return n_nodes == 0 ? 0.0 : static_cast<double>(lwcc_size) / static_cast<double>(n_nodes);
}

double ComponentStats::lscc_relative() const noexcept {
    return n_nodes == 0 ? 0.0 : static_cast<double>(lscc_size) / static_cast<double>(n_nodes);
}

std::optional<double> ComponentStats::wcc_ratio() const noexcept {
    if (second_wcc_size == 0) return std::nullopt;
    return static_cast<double>(lwcc_size) / static_cast<double>(second_wcc_size);
}

std::optional<double> ComponentStats::scc_ratio() const noexcept {
    if (second_scc_size == 0) return std::nullopt;
    return static_cast<double>(lscc_size) / static_cast<double>(second_scc_size);
}

ComponentStats component_stats(const UserGraph& g) {
    if (g.empty()) throw Error(ErrorCode::EmptyGraph, "component statistics need at least one node");
    const auto weak = weak_component_labels(g);
    const auto strong = strong_component_labels(g);
    ComponentStats s;
    s.week = g.week();
    s.n_nodes = g.node_count();
    s.n_wcc = weak.count;
    s.n_scc = strong.count;
    std::tie(s.lwcc_size, s.second_wcc_size) = two_largest(weak);
    std::tie(s.lscc_size, s.second_scc_size) = two_largest(strong);
    return s;
}

}  // namespace bunforge
