#include "bunforge/eval.hpp"

#include "bunforge/csv.hpp"
#include "bunforge/error.hpp"

#include <map>
#include <utility>

namespace bunforge {

namespace {

double pairs(std::uint64_t n) {
    return n < 2 ? 0.0 : static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
}

}  // namespace

ClusteringScore score_partition(const AddressLabels& predicted, const AddressLabels& truth) {
    if (predicted.size() != truth.size()) {
        throw Error(ErrorCode::UniverseMismatch, "predicted covers " + std::to_string(predicted.size()) +
                                                     " addresses, truth " + std::to_string(truth.size()));
    }
    // Contingency counts: true positives are pairs sharing both labels.
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> joint;
    std::unordered_map<std::uint64_t, std::uint64_t> pred_sizes;
    std::unordered_map<std::uint64_t, std::uint64_t> true_sizes;
    for (const auto& [address, p] : predicted) {
        const auto it = truth.find(address);
        if (it == truth.end()) {
            throw Error(ErrorCode::UniverseMismatch, "address '" + address + "' missing from truth");
        }
        ++joint[{p, it->second}];
        ++pred_sizes[p];
        ++true_sizes[it->second];
    }
    double tp = 0.0;
    for (const auto& [_, n] : joint) tp += pairs(n);
    double pred_pairs = 0.0;
    for (const auto& [_, n] : pred_sizes) pred_pairs += pairs(n);
    double true_pairs = 0.0;
    for (const auto& [_, n] : true_sizes) true_pairs += pairs(n);

    ClusteringScore s;
    s.precision = pred_pairs == 0.0 ? 1.0 : tp / pred_pairs;
    s.recall = true_pairs == 0.0 ? 1.0 : tp / true_pairs;
    const double denom = s.precision + s.recall;
    s.f1 = denom == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / denom;
    return s;
}

void write_score_csv(std::uint64_t seed, const ClusteringScore& score, const std::filesystem::path& path) {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    if (fresh) out << "stream_seed,precision,recall,f1\n";
    out << seed << ',' << csv::format_double(score.precision) << ',' << csv::format_double(score.recall) << ','
        << csv::format_double(score.f1) << '\n';
    if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace bunforge
