#pragma once

#include "bunforge/source.hpp"
#include "bunforge/tx_record.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace bunforge {

/// Probability of each transaction shape; validated to be non-negative and
/// to sum to one within 1e-9.
class PatternMix {
  public:
    PatternMix() = default;
    explicit PatternMix(const std::map<TxPattern, double>& shares);

    /// Parses "1-1:0.25,1-2:0.51,1-3:0.12,other:0.12".
    static PatternMix parse(std::string_view text);

    [[nodiscard]] double share(TxPattern p) const noexcept {
        return shares_[static_cast<std::size_t>(p)];
    }
    [[nodiscard]] std::string to_string() const;

  private:
    std::array<double, 4> shares_{0.25, 0.51, 0.12, 0.12};
};

struct SyntheticConfig {
    std::uint64_t seed = 7;
    std::uint64_t n_tx = 0;
    PatternMix mix;
    WeekMapping mapping;
    std::uint64_t txs_per_block = 100;
    /// Chance that a payment goes to a brand-new entity.
    double new_entity_prob = 0.3;
    /// Chance that a recipient receives on a fresh address of its own.
    double fresh_address_prob = 0.5;
    /// Chance that the change output is not the smallest output, which makes
    /// the change heuristic wrong for that transaction.
    double change_noise = 0.05;
    /// Within the "other" bucket, share of coinbase transactions.
    double coinbase_share = 0.1;
};

/// Deterministic transaction generator with a known address->entity map.
/// Entities spend from addresses they own; the change output goes to a fresh
/// address of the sender.
class SyntheticSource final : public RecordSource {
  public:
    explicit SyntheticSource(SyntheticConfig config, std::uint64_t start_count = 0);

    std::optional<TxRecord> next() override;
    [[nodiscard]] SourceCursor cursor() const override {
        return {SourceKind::Synthetic, emitted_, 0};
    }

    /// Ground-truth entity of every address emitted so far.
    [[nodiscard]] std::unordered_map<std::string, std::uint64_t> ground_truth() const;

  private:
    std::uint64_t new_entity();
    std::uint32_t new_address(std::uint64_t entity);
    std::uint64_t pick_active_entity();
    std::uint32_t pick_address(std::uint64_t entity);
    double uniform();
    std::uint64_t below(std::uint64_t n);
    Satoshi payment_value();
    TxRecord make(TxPattern pattern);

    SyntheticConfig config_;
    std::mt19937_64 rng_;
    std::uint64_t emitted_ = 0;
    std::vector<std::string> address_names_;
    std::vector<std::vector<std::uint32_t>> entity_addresses_;
    std::vector<std::uint64_t> address_entity_;
    std::vector<std::uint64_t> activity_;
};

}  // namespace bunforge
