#pragma once

#include "bunforge/graph.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace bunforge {

enum class DegreeKind { In, Out };

/// Pearson correlation, over all directed edges (u, v), between the
/// `src_kind` degree of u and the `dst_kind` degree of v. Raw degrees are
/// used. Returns nullopt when either marginal has zero variance; throws
/// Error(TooFewEdges) below two edges.
std::optional<double> assortativity(const UserGraph& g, DegreeKind src_kind, DegreeKind dst_kind);

struct AssortativityQuad {
    std::optional<double> out_out;
    std::optional<double> out_in;
    std::optional<double> in_out;
    std::optional<double> in_in;
};

/// All four variants; every entry is nullopt when the graph has fewer than two edges.
AssortativityQuad assortativity_quad(const UserGraph& g);

struct PageRankOptions {
    double damping = 0.85;
    double tolerance = 1e-10;  // on the L1 change between iterates
    std::uint32_t max_iterations = 100;
    /// Called after every iteration with the current vector.
    std::function<void(std::uint32_t, std::span<const double>)> on_iteration;
};

struct PageRankResult {
    std::vector<double> values;  // indexed by NodeIndex
    std::uint32_t iterations = 0;
    bool converged = false;      // false: stopped at max_iterations
    double last_delta = 0.0;
};

/// Power iteration of PR(i) = (1-d)/N + d * sum_{j->i} PR(j)/L(j), with the
/// mass of dangling nodes spread uniformly over all N nodes each iteration.
/// Starts from the uniform vector. Throws Error(EmptyGraph) on zero nodes.
PageRankResult pagerank(const UserGraph& g, const PageRankOptions& options = {});

struct HitsOptions {
    std::uint32_t iterations = 20;
    /// When set, stop early once both vectors move less than this in L1.
    std::optional<double> tolerance;
    /// Initial value of every entry of both vectors.
    double initial = 1.0;
};

struct HitsResult {
    std::vector<double> authorities;  // indexed by NodeIndex, unit L2 norm
    std::vector<double> hubs;
    std::uint32_t iterations = 0;
    /// An update produced the zero vector (edgeless graph); both vectors were
    /// reset to the uniform unit vector.
    bool degenerate = false;
};

/// Kleinberg's mutual reinforcement: authority(p) = sum of hub(q) over q->p,
/// then hub(p) = sum of authority(q) over p->q, each L2-normalized after its
/// update. Throws Error(EmptyGraph) on zero nodes.
HitsResult hits(const UserGraph& g, const HitsOptions& options = {});

/// Gini coefficient sum_i sum_j |x_i - x_j| / (2 n^2 mean), computed in
/// O(n log n) from the sorted values. Throws Error(ZeroMean) for empty or
/// all-zero input and Error(InvalidArgument) for negative entries.
double gini(std::span<const double> values);

struct RankedScore {
    UserId user;
    double score = 0.0;
};

/// Highest `c` scores, ties broken by smaller UserId.
std::vector<RankedScore> top_c(const UserGraph& g, std::span<const double> scores, std::size_t c);

}  // namespace bunforge
