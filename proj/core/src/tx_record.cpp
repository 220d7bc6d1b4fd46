#include "bunforge/tx_record.hpp"

#include "bunforge/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <limits>

namespace bunforge {

using nlohmann::json;

namespace {

std::string where(std::uint64_t line_number, std::string_view field) {
    std::string out = "line " + std::to_string(line_number) + ", field '";
    out += field;
    out += "'";
    return out;
}

Satoshi parse_amount(const json& node, std::uint64_t line_number, const std::string& field) {
    if (!node.is_number()) {
        throw Error(ErrorCode::MalformedSyntax, where(line_number, field) + ": value is not a number");
    }
    if (node.is_number_unsigned()) {
        const auto v = node.get<std::uint64_t>();
        if (v > static_cast<std::uint64_t>(std::numeric_limits<Satoshi>::max() / kSatoshiPerBtc)) {
            throw Error(ErrorCode::InvalidRecord, where(line_number, field) + ": value out of range");
        }
        return static_cast<Satoshi>(v) * kSatoshiPerBtc;
    }
    if (node.is_number_integer()) {
        const auto v = node.get<std::int64_t>();
        if (v < 0) {
            throw Error(ErrorCode::NegativeValue, where(line_number, field) + ": negative value");
        }
        return v * kSatoshiPerBtc;
    }
    const double v = node.get<double>();
    if (!std::isfinite(v)) {
        throw Error(ErrorCode::InvalidRecord, where(line_number, field) + ": non-finite value");
    }
    if (v < 0.0) {
        throw Error(ErrorCode::NegativeValue, where(line_number, field) + ": negative value");
    }
    const double scaled = v * static_cast<double>(kSatoshiPerBtc);
    if (scaled > 9.0e15) {
        throw Error(ErrorCode::InvalidRecord, where(line_number, field) + ": value out of range");
    }
    const auto sats = static_cast<Satoshi>(std::llround(scaled));
    // The value must be exactly the double nearest to an 8-digit decimal.
    if (std::strtod(format_btc(sats).c_str(), nullptr) != v) {
        throw Error(ErrorCode::InvalidRecord,
                    where(line_number, field) + ": more than 8 fractional digits");
    }
    return sats;
}

std::vector<TxEndpoint> parse_endpoints(const json& node, std::uint64_t line_number,
                                        const char* name) {
    if (!node.is_array()) {
        throw Error(ErrorCode::MalformedSyntax, where(line_number, name) + ": expected an array");
    }
    std::vector<TxEndpoint> out;
    out.reserve(node.size());
    for (std::size_t i = 0; i < node.size(); ++i) {
        const std::string field = std::string(name) + "[" + std::to_string(i) + "]";
        const json& pair = node[i];
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string()) {
            throw Error(ErrorCode::MalformedSyntax,
                        where(line_number, field) + ": expected [address, value]");
        }
        TxEndpoint ep;
        ep.address = pair[0].get<std::string>();
        ep.value = parse_amount(pair[1], line_number, field + ".value");
        out.push_back(std::move(ep));
    }
    return out;
}

std::uint64_t parse_count(const json& obj, std::uint64_t line_number, const char* name) {
    const auto it = obj.find(name);
    if (it == obj.end()) {
        throw Error(ErrorCode::MalformedSyntax, where(line_number, name) + ": missing key");
    }
    if (!it->is_number_integer()) {
        throw Error(ErrorCode::MalformedSyntax,
                    where(line_number, name) + ": expected a non-negative integer");
    }
    if (it->is_number_unsigned()) return it->get<std::uint64_t>();
    const auto v = it->get<std::int64_t>();
    if (v < 0) {
        throw Error(ErrorCode::NegativeValue, where(line_number, name) + ": negative value");
    }
    return static_cast<std::uint64_t>(v);
}

}  // namespace

std::uint64_t WeekMapping::week_of(std::uint64_t height) const {
    if (blocks_per_week == 0) {
        throw Error(ErrorCode::InvalidConfig, "blocks_per_week must be positive");
    }
    if (height < genesis_height) {
        throw Error(ErrorCode::InvalidRecord, "height " + std::to_string(height) +
                                                  " precedes genesis height " +
                                                  std::to_string(genesis_height));
    }
    return (height - genesis_height) / blocks_per_week;
}

std::string format_btc(Satoshi value) {
    std::string out;
    if (value < 0) {
        out.push_back('-');
        value = -value;
    }
    out += std::to_string(value / kSatoshiPerBtc);
    auto frac = value % kSatoshiPerBtc;
    if (frac != 0) {
        std::string digits = std::to_string(frac);
        digits.insert(0, 8 - digits.size(), '0');
        while (!digits.empty() && digits.back() == '0') digits.pop_back();
        out.push_back('.');
        out += digits;
    }
    return out;
}

void validate_record(const TxRecord& tx, const WeekMapping& mapping, std::uint64_t line_number) {
    if (tx.txid.empty()) {
        throw Error(ErrorCode::InvalidRecord, where(line_number, "txid") + ": empty id");
    }
    if (tx.outputs.empty()) {
        throw Error(ErrorCode::EmptyOutputs, where(line_number, "outputs") + ": no outputs");
    }
    auto check = [&](const std::vector<TxEndpoint>& eps, const char* name) {
        for (std::size_t i = 0; i < eps.size(); ++i) {
            const std::string field = std::string(name) + "[" + std::to_string(i) + "]";
            if (eps[i].address.empty()) {
                throw Error(ErrorCode::InvalidRecord, where(line_number, field) + ": empty address");
            }
            if (eps[i].value < 0) {
                throw Error(ErrorCode::NegativeValue,
                            where(line_number, field + ".value") + ": negative value");
            }
        }
    };
    check(tx.inputs, "inputs");
    check(tx.outputs, "outputs");
    std::uint64_t expected = 0;
    try {
        expected = mapping.week_of(tx.height);
    } catch (const Error& e) {
        throw Error(ErrorCode::WeekMismatch, where(line_number, "height") + ": " + e.what());
    }
    if (expected != tx.week) {
        throw Error(ErrorCode::WeekMismatch, where(line_number, "week") + ": height " +
                                                 std::to_string(tx.height) + " maps to week " +
                                                 std::to_string(expected) + ", record says " +
                                                 std::to_string(tx.week));
    }
}

TxRecord parse_record(std::string_view line, std::uint64_t line_number, const WeekMapping& mapping) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedSyntax, where(line_number, "<record>") + ": " + e.what());
    }
    if (!obj.is_object()) {
        throw Error(ErrorCode::MalformedSyntax, where(line_number, "<record>") + ": expected an object");
    }
    for (const auto& [key, _] : obj.items()) {
        if (key != "txid" && key != "height" && key != "week" && key != "inputs" && key != "outputs") {
            throw Error(ErrorCode::MalformedSyntax, where(line_number, key) + ": unexpected key");
        }
    }
    TxRecord tx;
    const auto txid = obj.find("txid");
    if (txid == obj.end() || !txid->is_string()) {
        throw Error(ErrorCode::MalformedSyntax, where(line_number, "txid") + ": expected a string");
    }
    tx.txid = txid->get<std::string>();
    tx.height = parse_count(obj, line_number, "height");
    tx.week = parse_count(obj, line_number, "week");
    for (const char* name : {"inputs", "outputs"}) {
        if (!obj.contains(name)) {
            throw Error(ErrorCode::MalformedSyntax, where(line_number, name) + ": missing key");
        }
    }
    tx.inputs = parse_endpoints(obj["inputs"], line_number, "inputs");
    tx.outputs = parse_endpoints(obj["outputs"], line_number, "outputs");
    validate_record(tx, mapping, line_number);
    return tx;
}

std::string serialize_record(const TxRecord& tx) {
    std::string out;
    out.reserve(64 + 32 * (tx.inputs.size() + tx.outputs.size()));
    out += "{\"txid\":";
    out += json(tx.txid).dump();
    out += ",\"height\":";
    out += std::to_string(tx.height);
    out += ",\"week\":";
    out += std::to_string(tx.week);
    auto endpoints = [&out](const std::vector<TxEndpoint>& eps) {
        out.push_back('[');
        for (std::size_t i = 0; i < eps.size(); ++i) {
            if (i != 0) out.push_back(',');
            out.push_back('[');
            out += json(eps[i].address).dump();
            out.push_back(',');
            out += format_btc(eps[i].value);
            out.push_back(']');
        }
        out.push_back(']');
    };
    out += ",\"inputs\":";
    endpoints(tx.inputs);
    out += ",\"outputs\":";
    endpoints(tx.outputs);
    out.push_back('}');
    return out;
}

std::optional<std::size_t> change_output_index(const TxRecord& tx) noexcept {
    if (tx.inputs.empty() || tx.outputs.size() < 2) return std::nullopt;
    std::size_t best = 0;
    for (std::size_t i = 1; i < tx.outputs.size(); ++i) {
        if (tx.outputs[i].value < tx.outputs[best].value) best = i;
    }
    return best;
}

TxPattern classify_pattern(const TxRecord& tx) noexcept {
    if (tx.inputs.size() != 1) return TxPattern::Other;
    switch (tx.outputs.size()) {
        case 1: return TxPattern::OneOne;
        case 2: return TxPattern::OneTwo;
        case 3: return TxPattern::OneThree;
        default: return TxPattern::Other;
    }
}

std::string_view to_string(TxPattern pattern) noexcept {
    switch (pattern) {
        case TxPattern::OneOne: return "1-1";
        case TxPattern::OneTwo: return "1-2";
        case TxPattern::OneThree: return "1-3";
        case TxPattern::Other: return "other";
    }
    return "other";
}

std::optional<TxPattern> parse_pattern(std::string_view text) noexcept {
    if (text == "1-1") return TxPattern::OneOne;
    if (text == "1-2") return TxPattern::OneTwo;
    if (text == "1-3") return TxPattern::OneThree;
    if (text == "other") return TxPattern::Other;
    return std::nullopt;
}

}  // namespace bunforge
