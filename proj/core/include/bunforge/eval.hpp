#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>

namespace bunforge {

/// Cluster label per address. Labels are only compared for equality.
using AddressLabels = std::unordered_map<std::string, std::uint64_t>;

struct ClusteringScore {
    double precision = 1.0;
    double recall = 1.0;
    double f1 = 1.0;
};

/// Pairwise scoring over unordered same-cluster address pairs.
/// Conventions: with no predicted pairs precision is 1, with no true pairs
/// recall is 1, and F1 is 0 when precision + recall is 0.
/// Throws Error(UniverseMismatch) unless both maps cover the same addresses.
ClusteringScore score_partition(const AddressLabels& predicted, const AddressLabels& truth);

/// Appends `stream_seed,precision,recall,f1` (header written when creating).
void write_score_csv(std::uint64_t seed, const ClusteringScore& score, const std::filesystem::path& path);

}  // namespace bunforge
