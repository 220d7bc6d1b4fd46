#include "bunforge/clustering.hpp"

#include "bunforge/error.hpp"

#include <algorithm>
#include <limits>

namespace bunforge {

AddressIndex ClusterState::register_address(std::string_view address) {
    if (auto it = index_.find(address); it != index_.end()) return it->second;
    if (addresses_.size() >= std::numeric_limits<AddressIndex>::max()) {
        throw Error(ErrorCode::InvalidRecord, "address registry full");
    }
    const auto idx = static_cast<AddressIndex>(addresses_.size());
    addresses_.emplace_back(address);
    index_.emplace(addresses_.back(), idx);
    parent_.push_back(idx);
    rank_.push_back(0);
    min_member_.push_back(idx);
    ++user_count_;
    return idx;
}

AddressIndex ClusterState::find(AddressIndex index) {
    AddressIndex root = index;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[index] != root) {
        const AddressIndex next = parent_[index];
        parent_[index] = root;
        index = next;
    }
    return root;
}

AddressIndex ClusterState::find_root(AddressIndex index) const {
    while (parent_[index] != index) index = parent_[index];
    return index;
}

bool ClusterState::unite(AddressIndex a, AddressIndex b, std::uint64_t week) {
    AddressIndex ra = find(a);
    AddressIndex rb = find(b);
    if (ra == rb) return false;
    if (rank_[ra] < rank_[rb] || (rank_[ra] == rank_[rb] && rb < ra)) std::swap(ra, rb);
    parent_[rb] = ra;
    if (rank_[ra] == rank_[rb]) ++rank_[ra];
    min_member_[ra] = std::min(min_member_[ra], min_member_[rb]);
    merge_log_.push_back({week, ra, rb});
    --user_count_;
    return true;
}

void ClusterState::apply_transaction(const TxRecord& tx) {
    if (tx.is_coinbase()) {
        for (const auto& out : tx.outputs) register_address(out.address);
        return;
    }
    const AddressIndex sender = register_address(tx.inputs.front().address);
    for (std::size_t i = 1; i < tx.inputs.size(); ++i) {
        unite(sender, register_address(tx.inputs[i].address), tx.week);
    }
    const auto change = change_output_index(tx);
    for (std::size_t i = 0; i < tx.outputs.size(); ++i) {
        const AddressIndex out = register_address(tx.outputs[i].address);
        // Unconditional: a change output already owned by another user merges
        // that user into the sender.
        if (change && *change == i) unite(sender, out, tx.week);
    }
}

std::optional<AddressIndex> ClusterState::index_of(std::string_view address) const {
    if (auto it = index_.find(address); it != index_.end()) return it->second;
    return std::nullopt;
}

UserId ClusterState::find_user(AddressIndex index) const {
    if (index >= addresses_.size()) {
        throw Error(ErrorCode::UnknownAddress, "address index " + std::to_string(index));
    }
    return UserId{min_member_[find_root(index)]};
}

UserId ClusterState::find_user(std::string_view address) const {
    const auto idx = index_of(address);
    if (!idx) throw Error(ErrorCode::UnknownAddress, "address '" + std::string(address) + "' never seen");
    return find_user(*idx);
}

Partition ClusterState::snapshot_partition() const {
    Partition out;
    for (AddressIndex i = 0; i < addresses_.size(); ++i) {
        out[find_user(i)].push_back(addresses_[i]);
    }
    for (auto& [_, members] : out) std::sort(members.begin(), members.end());
    return out;
}

ClusterState ClusterState::replay(std::span<const std::string> addresses, std::span<const MergeEvent> log) {
    ClusterState state;
    state.addresses_.reserve(addresses.size());
    for (const auto& a : addresses) {
        const auto before = state.addresses_.size();
        state.register_address(a);
        if (state.addresses_.size() == before) {
            throw Error(ErrorCode::StateMismatch, "duplicate address '" + a + "' in registry");
        }
    }
    for (const auto& ev : log) {
        if (ev.survivor >= addresses.size() || ev.absorbed >= addresses.size()) {
            throw Error(ErrorCode::StateMismatch, "merge log references unknown address index");
        }
        state.unite(ev.survivor, ev.absorbed, ev.week);
    }
    return state;
}

}  // namespace bunforge
