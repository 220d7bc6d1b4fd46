#include "bunforge/synthetic.hpp"

#include "bunforge/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bunforge {

PatternMix::PatternMix(const std::map<TxPattern, double>& shares) {
    shares_.fill(0.0);
    double sum = 0.0;
    for (const auto& [pattern, p] : shares) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw Error(ErrorCode::InvalidMix, "share of " + std::string(bunforge::to_string(pattern)) +
                                                   " must be a non-negative number");
        }
        shares_[static_cast<std::size_t>(pattern)] = p;
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidMix, "shares sum to " + std::to_string(sum) + ", expected 1");
    }
}

PatternMix PatternMix::parse(std::string_view text) {
    std::map<TxPattern, double> shares;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto item = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) {
            throw Error(ErrorCode::InvalidMix, "expected pattern:share, got '" + std::string(item) + "'");
        }
        const auto pattern = parse_pattern(item.substr(0, colon));
        if (!pattern) {
            throw Error(ErrorCode::InvalidMix, "unknown pattern '" + std::string(item.substr(0, colon)) + "'");
        }
        const std::string number(item.substr(colon + 1));
        char* end = nullptr;
        const double p = std::strtod(number.c_str(), &end);
        if (number.empty() || end != number.c_str() + number.size()) {
            throw Error(ErrorCode::InvalidMix, "bad share '" + number + "'");
        }
        shares[*pattern] = p;
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return PatternMix(shares);
}

std::string PatternMix::to_string() const {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t i = 0; i < shares_.size(); ++i) {
        if (i != 0) out << ',';
        out << bunforge::to_string(static_cast<TxPattern>(i)) << ':' << shares_[i];
    }
    return out.str();
}

SyntheticSource::SyntheticSource(SyntheticConfig config, std::uint64_t start_count)
    : config_(std::move(config)), rng_(config_.seed) {
    if (config_.txs_per_block == 0) {
        throw Error(ErrorCode::InvalidConfig, "txs_per_block must be positive");
    }
    if (start_count > config_.n_tx) {
        throw Error(ErrorCode::InvalidRange, "cursor beyond end of synthetic stream");
    }
    // Generator state depends on every earlier draw, so resuming replays the prefix.
    while (emitted_ < start_count) next();
}

std::unordered_map<std::string, std::uint64_t> SyntheticSource::ground_truth() const {
    std::unordered_map<std::string, std::uint64_t> truth;
    truth.reserve(address_names_.size());
    for (std::size_t i = 0; i < address_names_.size(); ++i) {
        truth.emplace(address_names_[i], address_entity_[i]);
    }
    return truth;
}

double SyntheticSource::uniform() {
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

std::uint64_t SyntheticSource::below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
}

std::uint64_t SyntheticSource::new_entity() {
    entity_addresses_.emplace_back();
    return entity_addresses_.size() - 1;
}

std::uint32_t SyntheticSource::new_address(std::uint64_t entity) {
    const auto index = static_cast<std::uint32_t>(address_names_.size());
    address_names_.push_back("a" + std::to_string(index));
    address_entity_.push_back(entity);
    entity_addresses_[entity].push_back(index);
    return index;
}

std::uint64_t SyntheticSource::pick_active_entity() {
    // Sampling past participations gives preferential attachment.
    if (activity_.empty()) {
        const auto e = new_entity();
        new_address(e);
        return e;
    }
    return activity_[below(activity_.size())];
}

std::uint32_t SyntheticSource::pick_address(std::uint64_t entity) {
    auto& owned = entity_addresses_[entity];
    if (owned.empty()) return new_address(entity);
    return owned[below(owned.size())];
}

Satoshi SyntheticSource::payment_value() {
    // Log-uniform between 0.0001 and 10 BTC.
    const double btc = std::pow(10.0, -4.0 + 5.0 * uniform());
    return std::max<Satoshi>(1, static_cast<Satoshi>(btc * static_cast<double>(kSatoshiPerBtc)));
}

TxRecord SyntheticSource::make(TxPattern pattern) {
    std::size_t n_in = 1;
    std::size_t n_out = 1;
    bool coinbase = false;
    switch (pattern) {
        case TxPattern::OneOne: break;
        case TxPattern::OneTwo: n_out = 2; break;
        case TxPattern::OneThree: n_out = 3; break;
        case TxPattern::Other:
            if (uniform() < config_.coinbase_share) {
                coinbase = true;
                n_in = 0;
                n_out = 1;
            } else {
                n_in = 2 + below(3);
                n_out = 1 + below(4);
            }
            break;
    }

    TxRecord tx;
    tx.txid = "s" + std::to_string(config_.seed) + "t" + std::to_string(emitted_);
    tx.height = config_.mapping.genesis_height + emitted_ / config_.txs_per_block;
    tx.week = config_.mapping.week_of(tx.height);

    std::uint64_t sender = 0;
    if (!coinbase) {
        sender = pick_active_entity();
        auto& owned = entity_addresses_[sender];
        while (owned.size() < n_in) new_address(sender);
        // Distinct inputs by rejection; n_in is at most 4.
        std::vector<std::uint32_t> chosen;
        while (chosen.size() < n_in) {
            const auto a = owned[below(owned.size())];
            if (std::find(chosen.begin(), chosen.end(), a) == chosen.end()) chosen.push_back(a);
        }
        for (const auto a : chosen) tx.inputs.push_back({address_names_[a], 0});
        activity_.push_back(sender);
    }

    // A change output exists whenever the shape allows the heuristic to apply.
    const bool has_change = !coinbase && n_out >= 2;
    const std::size_t n_payments = has_change ? n_out - 1 : n_out;
    std::vector<TxEndpoint> outputs;
    Satoshi total = 0;
    Satoshi smallest = 0;
    Satoshi largest = 0;
    for (std::size_t i = 0; i < n_payments; ++i) {
        std::uint64_t recipient = 0;
        if (activity_.empty() || uniform() < config_.new_entity_prob) {
            recipient = new_entity();
        } else {
            recipient = pick_active_entity();
            if (recipient == sender && !coinbase) recipient = new_entity();
        }
        const std::uint32_t addr = (entity_addresses_[recipient].empty() ||
                                    uniform() < config_.fresh_address_prob)
                                       ? new_address(recipient)
                                       : pick_address(recipient);
        const Satoshi value = payment_value();
        outputs.push_back({address_names_[addr], value});
        activity_.push_back(recipient);
        total += value;
        smallest = i == 0 ? value : std::min(smallest, value);
        largest = std::max(largest, value);
    }
    if (has_change) {
        Satoshi change = 0;
        if (uniform() < config_.change_noise) {
            change = largest + 1 + static_cast<Satoshi>(static_cast<double>(largest) * uniform());
        } else {
            change = std::max<Satoshi>(0, static_cast<Satoshi>(static_cast<double>(smallest) *
                                                               (0.05 + 0.9 * uniform())));
            if (change >= smallest) change = smallest - 1;
        }
        const std::uint32_t addr = new_address(sender);
        const auto pos = below(outputs.size() + 1);
        outputs.insert(outputs.begin() + static_cast<std::ptrdiff_t>(pos), {address_names_[addr], change});
        total += change;
    }
    tx.outputs = std::move(outputs);

    if (!coinbase) {
        const Satoshi fee = 1000;
        const Satoshi per_input = (total + fee) / static_cast<Satoshi>(n_in);
        for (auto& in : tx.inputs) in.value = per_input;
        tx.inputs.back().value += (total + fee) - per_input * static_cast<Satoshi>(n_in);
    }
    return tx;
}

std::optional<TxRecord> SyntheticSource::next() {
    if (emitted_ >= config_.n_tx) return std::nullopt;
    const double u = uniform();
    auto pattern = TxPattern::Other;
    double acc = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const auto p = static_cast<TxPattern>(i);
        acc += config_.mix.share(p);
        if (u < acc && config_.mix.share(p) > 0.0) {
            pattern = p;
            break;
        }
    }
    // Rounding can leave u above the accumulated total; fall back to the last
    // pattern with non-zero share.
    if (u >= acc) {
        for (std::size_t i = 4; i-- > 0;) {
            if (config_.mix.share(static_cast<TxPattern>(i)) > 0.0) {
                pattern = static_cast<TxPattern>(i);
                break;
            }
        }
    }
    TxRecord tx = make(pattern);
    ++emitted_;
    return tx;
}

}  // namespace bunforge
