#include "bunforge/metrics.hpp"

#include "bunforge/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bunforge {

namespace {

std::size_t degree(const UserGraph& g, NodeIndex v, DegreeKind kind) {
    return kind == DegreeKind::In ? g.in_degree(v) : g.out_degree(v);
}

// Integer moments keep the covariance numerators exact; only the final
// division and square root round.
__extension__ using Wide = __int128;

double to_double(Wide v) { return static_cast<double>(v); }

}  // namespace

std::optional<double> assortativity(const UserGraph& g, DegreeKind src_kind, DegreeKind dst_kind) {
    const auto m = static_cast<Wide>(g.edge_count());
    if (m < 2) {
        throw Error(ErrorCode::TooFewEdges, "assortativity needs at least two edges, graph has " +
                                                std::to_string(g.edge_count()));
    }
    Wide sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    g.for_each_edge([&](NodeIndex u, NodeIndex v) {
        const auto x = static_cast<Wide>(degree(g, u, src_kind));
        const auto y = static_cast<Wide>(degree(g, v, dst_kind));
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    });
    const Wide cov = m * sxy - sx * sy;
    const Wide var_x = m * sxx - sx * sx;
    const Wide var_y = m * syy - sy * sy;
    if (var_x == 0 || var_y == 0) return std::nullopt;
    const double r = to_double(cov) / (std::sqrt(to_double(var_x)) * std::sqrt(to_double(var_y)));
    return std::clamp(r, -1.0, 1.0);
}

AssortativityQuad assortativity_quad(const UserGraph& g) {
    AssortativityQuad q;
    if (g.edge_count() < 2) return q;
    q.out_out = assortativity(g, DegreeKind::Out, DegreeKind::Out);
    q.out_in = assortativity(g, DegreeKind::Out, DegreeKind::In);
    q.in_out = assortativity(g, DegreeKind::In, DegreeKind::Out);
    q.in_in = assortativity(g, DegreeKind::In, DegreeKind::In);
    return q;
}

PageRankResult pagerank(const UserGraph& g, const PageRankOptions& options) {
    const std::size_t n = g.node_count();
    if (n == 0) throw Error(ErrorCode::EmptyGraph, "pagerank needs at least one node");
    const double d = options.damping;
    if (!(d > 0.0 && d < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "damping must lie in (0, 1)");
    }
    const double inv_n = 1.0 / static_cast<double>(n);

    std::vector<double> share(n, 0.0);  // PR(j) / L(j), or 0 for dangling j
    std::vector<double> next(n, 0.0);
    PageRankResult result;
    result.values.assign(n, inv_n);
    auto& pr = result.values;

    while (result.iterations < options.max_iterations) {
        // Sequential sums in node order keep results bitwise reproducible.
        double dangling = 0.0;
        for (NodeIndex v = 0; v < n; ++v) {
            const auto out = g.out_degree(v);
            if (out == 0) {
                dangling += pr[v];
                share[v] = 0.0;
            } else {
                share[v] = pr[v] / static_cast<double>(out);
            }
        }
        const double base = (1.0 - d) * inv_n + d * dangling * inv_n;
        double delta = 0.0;
        for (NodeIndex v = 0; v < n; ++v) {
            double acc = 0.0;
            for (const NodeIndex u : g.in_neighbors(v)) acc += share[u];
            next[v] = base + d * acc;
            delta += std::abs(next[v] - pr[v]);
        }
        pr.swap(next);
        ++result.iterations;
        result.last_delta = delta;
        if (options.on_iteration) options.on_iteration(result.iterations, pr);
        if (delta < options.tolerance) {
            result.converged = true;
            break;
        }
    }
    return result;
}

namespace {

// Returns false if the vector is all zeros (left untouched).
bool normalize_l2(std::vector<double>& v) {
    double sq = 0.0;
    for (const double x : v) sq += x * x;
    if (sq == 0.0) return false;
    const double norm = std::sqrt(sq);
    for (double& x : v) x /= norm;
    return true;
}

}  // namespace

HitsResult hits(const UserGraph& g, const HitsOptions& options) {
    const std::size_t n = g.node_count();
    if (n == 0) throw Error(ErrorCode::EmptyGraph, "HITS needs at least one node");
    if (!(options.initial > 0.0)) throw Error(ErrorCode::InvalidArgument, "initial weight must be positive");

    HitsResult r;
    r.authorities.assign(n, options.initial);
    r.hubs.assign(n, options.initial);
    std::vector<double> prev_auth;
    std::vector<double> prev_hub;

    auto reset_uniform = [&] {
        const double u = 1.0 / std::sqrt(static_cast<double>(n));
        r.authorities.assign(n, u);
        r.hubs.assign(n, u);
        r.degenerate = true;
    };

    for (std::uint32_t k = 0; k < options.iterations; ++k) {
        if (options.tolerance) {
            prev_auth = r.authorities;
            prev_hub = r.hubs;
        }
        // Operation I: authorities from in-neighbours' hub weights.
        std::vector<double> auth(n, 0.0);
        for (NodeIndex p = 0; p < n; ++p) {
            for (const NodeIndex q : g.in_neighbors(p)) auth[p] += r.hubs[q];
        }
        if (!normalize_l2(auth)) {
            ++r.iterations;
            reset_uniform();
            return r;
        }
        r.authorities.swap(auth);

        // Operation II: hubs from out-neighbours' (updated) authority weights.
        std::vector<double> hub(n, 0.0);
        for (NodeIndex p = 0; p < n; ++p) {
            for (const NodeIndex q : g.out_neighbors(p)) hub[p] += r.authorities[q];
        }
        if (!normalize_l2(hub)) {
            ++r.iterations;
            reset_uniform();
            return r;
        }
        r.hubs.swap(hub);
        ++r.iterations;

        if (options.tolerance) {
            double delta = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                delta += std::abs(r.authorities[i] - prev_auth[i]) + std::abs(r.hubs[i] - prev_hub[i]);
            }
            if (delta < *options.tolerance) break;
        }
    }
    return r;
}

double gini(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n == 0) throw Error(ErrorCode::ZeroMean, "Gini of an empty vector");
    std::vector<double> x(values.begin(), values.end());
    for (const double v : x) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw Error(ErrorCode::InvalidArgument, "Gini needs finite non-negative values");
        }
    }
    std::sort(x.begin(), x.end());
    double total = 0.0;
    for (const double v : x) total += v;
    if (total == 0.0) throw Error(ErrorCode::ZeroMean, "Gini of an all-zero vector");

    // sum_i sum_j |x_i - x_j| = 2 * sum_i (2i - n - 1) x_(i) for ascending
    // 1-based order. Pairing i with n+1-i turns it into a sum of non-negative
    // gaps, so equal values cancel exactly.
    double acc = 0.0;
    for (std::size_t i = 0, j = n - 1; i < j; ++i, --j) {
        acc += static_cast<double>(j - i) * (x[j] - x[i]);
    }
    return acc / (static_cast<double>(n) * total);
}

std::vector<RankedScore> top_c(const UserGraph& g, std::span<const double> scores, std::size_t c) {
    std::vector<NodeIndex> order(g.node_count());
    std::iota(order.begin(), order.end(), NodeIndex{0});
    const std::size_t k = std::min(c, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](NodeIndex a, NodeIndex b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return g.id(a) < g.id(b);
                      });
    std::vector<RankedScore> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back({g.id(order[i]), scores[order[i]]});
    return out;
}

}  // namespace bunforge
