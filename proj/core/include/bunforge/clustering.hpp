#pragma once

#include "bunforge/tx_record.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bunforge {

/// Dense index of an address, assigned in first-seen order. Because indices
/// are handed out monotonically, the index doubles as the first-seen sequence
/// number.
using AddressIndex = std::uint32_t;

/// Canonical user id: the smallest first-seen sequence number in the cluster.
struct UserId {
    std::uint64_t value = 0;

    friend auto operator<=>(const UserId&, const UserId&) = default;
};

struct MergeEvent {
    std::uint64_t week = 0;
    AddressIndex survivor = 0;
    AddressIndex absorbed = 0;

    friend bool operator==(const MergeEvent&, const MergeEvent&) = default;
};

using Partition = std::map<UserId, std::vector<std::string>>;

/// Incremental address clustering with the multi-input and change heuristics.
///
/// Union-find with path compression and union by rank. Every successful union
/// is appended to the merge log as (week, surviving root, absorbed root);
/// replaying the log over the same address registry rebuilds the partition.
class ClusterState {
  public:
    ClusterState() = default;

    /// Applies both heuristics to one transaction:
    ///  - all inputs are unioned into one cluster;
    ///  - with >= 1 input and >= 2 outputs, the output selected by
    ///    change_output_index() joins the input cluster, other outputs are
    ///    registered as their own (new or existing) users;
    ///  - single-output and coinbase transactions only register addresses.
    void apply_transaction(const TxRecord& tx);

    /// Registers an address if unseen and returns its index.
    AddressIndex register_address(std::string_view address);

    /// Unions the clusters of two registered addresses; returns true if they
    /// were distinct. The merge is logged under `week`.
    bool unite(AddressIndex a, AddressIndex b, std::uint64_t week);

    /// Canonical user of a seen address; throws Error(UnknownAddress).
    [[nodiscard]] UserId find_user(std::string_view address) const;
    [[nodiscard]] UserId find_user(AddressIndex index) const;
    [[nodiscard]] std::optional<AddressIndex> index_of(std::string_view address) const;

    /// Root lookup with path compression.
    AddressIndex find(AddressIndex index);
    /// Root lookup without mutating the forest (safe for concurrent readers).
    [[nodiscard]] AddressIndex find_root(AddressIndex index) const;

    /// Users ordered by canonical id, addresses lexicographic within each.
    [[nodiscard]] Partition snapshot_partition() const;

    [[nodiscard]] std::size_t address_count() const noexcept { return addresses_.size(); }
    [[nodiscard]] std::size_t user_count() const noexcept { return user_count_; }
    [[nodiscard]] const std::string& address(AddressIndex index) const { return addresses_.at(index); }
    [[nodiscard]] std::span<const std::string> addresses() const noexcept { return addresses_; }
    [[nodiscard]] std::span<const MergeEvent> merge_log() const noexcept { return merge_log_; }

    /// Rebuilds a state from an address registry (in index order) and a merge log.
    static ClusterState replay(std::span<const std::string> addresses, std::span<const MergeEvent> log);

  private:
    struct StringHash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept {
            return std::hash<std::string_view>{}(s);
        }
    };

    std::vector<std::string> addresses_;
    std::unordered_map<std::string, AddressIndex, StringHash, std::equal_to<>> index_;
    std::vector<AddressIndex> parent_;
    std::vector<std::uint8_t> rank_;
    // Minimum member index per root; meaningful only at roots.
    std::vector<AddressIndex> min_member_;
    std::vector<MergeEvent> merge_log_;
    std::size_t user_count_ = 0;
};

}  // namespace bunforge
