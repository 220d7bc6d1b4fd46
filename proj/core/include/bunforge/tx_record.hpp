#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bunforge {

/// Amount in satoshis. Record files carry decimal BTC with at most eight
/// fractional digits, so every legal value maps exactly onto this integer.
using Satoshi = std::int64_t;

inline constexpr Satoshi kSatoshiPerBtc = 100'000'000;

struct TxEndpoint {
    std::string address;
    Satoshi value = 0;

    friend bool operator==(const TxEndpoint&, const TxEndpoint&) = default;
};

struct TxRecord {
    std::string txid;
    std::uint64_t height = 0;
    std::uint64_t week = 0;
    std::vector<TxEndpoint> inputs;
    std::vector<TxEndpoint> outputs;

    [[nodiscard]] bool is_coinbase() const noexcept { return inputs.empty(); }

    friend bool operator==(const TxRecord&, const TxRecord&) = default;
};

/// Height to week-index mapping: week = (height - genesis_height) / blocks_per_week.
struct WeekMapping {
    std::uint64_t genesis_height = 0;
    std::uint64_t blocks_per_week = 1008;

    [[nodiscard]] std::uint64_t week_of(std::uint64_t height) const;
};

/// Parses one JSONL line. `line_number` is only used in error messages.
TxRecord parse_record(std::string_view line, std::uint64_t line_number = 0,
                      const WeekMapping& mapping = {});

/// Canonical single-line serialization (no trailing newline).
std::string serialize_record(const TxRecord& tx);

/// Checks the record invariants; throws Error naming the offending field.
void validate_record(const TxRecord& tx, const WeekMapping& mapping, std::uint64_t line_number = 0);

/// Shortest decimal BTC text for a satoshi amount ("5", "2.5", "0.00000001").
std::string format_btc(Satoshi value);

/// Index of the output the change heuristic selects: the strictly smallest
/// value, earliest index on ties. Empty unless the transaction has at least
/// one input and at least two outputs.
std::optional<std::size_t> change_output_index(const TxRecord& tx) noexcept;

enum class TxPattern { OneOne, OneTwo, OneThree, Other };

TxPattern classify_pattern(const TxRecord& tx) noexcept;
std::string_view to_string(TxPattern pattern) noexcept;
std::optional<TxPattern> parse_pattern(std::string_view text) noexcept;

}  // namespace bunforge
