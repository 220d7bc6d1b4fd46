#pragma once

#include "bunforge/graph.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace bunforge {

/// Component id per node plus component count. Ids are dense in [0, count).
struct ComponentLabels {
    std::vector<std::uint32_t> label;
    std::uint32_t count = 0;
};

/// Weak components: union-find over edges with directions ignored.
ComponentLabels weak_component_labels(const UserGraph& g);

/// Strong components: iterative Tarjan, O(V + E) time, explicit heap stacks.
/// Labels come out in reverse topological order of the condensation (sink
/// components first).
ComponentLabels strong_component_labels(const UserGraph& g);

/// Components as sorted node-id sets, ordered by size descending then by
/// smallest UserId.
std::vector<std::vector<UserId>> wcc(const UserGraph& g);
std::vector<std::vector<UserId>> scc(const UserGraph& g);

struct ComponentStats {
    std::uint64_t week = 0;
    std::uint64_t n_nodes = 0;
    std::uint64_t n_wcc = 0;
    std::uint64_t n_scc = 0;
    std::uint64_t lwcc_size = 0;
    std::uint64_t lscc_size = 0;
    std::uint64_t second_wcc_size = 0;
    std::uint64_t second_scc_size = 0;

    [[nodiscard]] double lwcc_relative() const noexcept;
    [[nodiscard]] double lscc_relative() const noexcept;
    /// Largest over second-largest; nullopt when there is no second component.
    [[nodiscard]] std::optional<double> wcc_ratio() const noexcept;
    [[nodiscard]] std::optional<double> scc_ratio() const noexcept;
};

/// Throws Error(EmptyGraph) for a graph without nodes.
ComponentStats component_stats(const UserGraph& g);

}  // namespace bunforge
