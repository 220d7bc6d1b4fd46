#include "bunforge/rpc.hpp"

#include "bunforge/error.hpp"
#include "bunforge/http.hpp"

#include <cmath>
#include <cstdlib>

namespace bunforge {

using nlohmann::json;

RpcConfig RpcConfig::from_env(RpcConfig base) {
    if (const char* url = std::getenv("BUNFORGE_RPC_URL"); url != nullptr && *url != '\0') {
        base.url = url;
    }
    if (const char* auth = std::getenv("BUNFORGE_RPC_AUTH"); auth != nullptr && *auth != '\0') {
        base.auth = auth;
    }
    return base;
}

RpcConfig RpcConfig::from_env() { return from_env(RpcConfig{}); }

struct RpcClient::Impl {
    HttpEndpoint endpoint;
};

RpcClient::RpcClient(RpcConfig config)
    : config_(std::move(config)), impl_(std::make_unique<Impl>(Impl{HttpEndpoint(config_.url, config_.timeout)})) {
    if (!config_.auth.empty()) impl_->endpoint.set_basic_auth(config_.auth);
}

RpcClient::~RpcClient() = default;

json RpcClient::call(const std::string& method, json params) {
    const json request = {{"jsonrpc", "1.0"}, {"id", "bunforge"}, {"method", method}, {"params", std::move(params)}};
    const HttpResponse res = impl_->endpoint.post(request.dump(), "application/json");
    json body;
    try {
        body = json::parse(res.body);
    } catch (const json::parse_error&) {
        throw Error(ErrorCode::RpcFailure,
                    method + ": HTTP " + std::to_string(res.status) + " with non-JSON body");
    }
    if (body.contains("error") && !body["error"].is_null()) {
        const auto& err = body["error"];
        const int code = err.value("code", 0);
        const std::string message = err.value("message", std::string("unknown error"));
        // -8: invalid parameter (height out of range); -5: no such block/transaction.
        if (method == "getblockhash" && (code == -8 || code == -5)) {
            throw Error(ErrorCode::UnknownHeight, message);
        }
        throw Error(ErrorCode::RpcFailure, method + ": " + message + " (code " + std::to_string(code) + ")");
    }
    if (res.status != 200) {
        throw Error(ErrorCode::RpcFailure, method + ": HTTP " + std::to_string(res.status));
    }
    return body.value("result", json());
}

void OutputCache::put(const std::string& key, TxEndpoint value) {
    if (capacity_ == 0) return;
    if (auto it = index_.find(key); it != index_.end()) {
        it->second->second = std::move(value);
        order_.splice(order_.begin(), order_, it->second);
        return;
    }
    order_.emplace_front(key, std::move(value));
    index_.emplace(key, order_.begin());
    if (index_.size() > capacity_) {
        index_.erase(order_.back().first);
        order_.pop_back();
    }
}

std::optional<TxEndpoint> OutputCache::get(const std::string& key) {
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    order_.splice(order_.begin(), order_, it->second);
    return it->second->second;
}

namespace {

std::string outpoint(const std::string& txid, std::uint64_t vout) {
    return txid + ":" + std::to_string(vout);
}

Satoshi to_satoshi(const json& value) {
    const double btc = value.get<double>();
    return static_cast<Satoshi>(std::llround(btc * static_cast<double>(kSatoshiPerBtc)));
}

std::optional<std::string> output_address(const json& vout) {
    const auto spk = vout.find("scriptPubKey");
    if (spk == vout.end()) return std::nullopt;
    if (auto a = spk->find("address"); a != spk->end() && a->is_string()) return a->get<std::string>();
    if (auto as = spk->find("addresses"); as != spk->end() && as->is_array() && !as->empty()) {
        return (*as)[0].get<std::string>();
    }
    return std::nullopt;
}

}  // namespace

RpcBlockSource::RpcBlockSource(RpcConfig config, std::uint64_t from_height, std::uint64_t to_height)
    : RpcBlockSource(std::move(config), to_height, SourceCursor{SourceKind::Rpc, from_height, 0}) {}

RpcBlockSource::RpcBlockSource(RpcConfig config, std::uint64_t to_height, SourceCursor resume)
    : client_(std::move(config)), to_height_(to_height), cursor_(resume), cache_(client_.config().lru_capacity) {
    if (resume.kind != SourceKind::Rpc) {
        throw Error(ErrorCode::InvalidConfig, "rpc source needs an rpc cursor");
    }
    if (resume.position > to_height) {
        throw Error(ErrorCode::InvalidRange, "from_height " + std::to_string(resume.position) +
                                                 " exceeds to_height " + std::to_string(to_height));
    }
}

void RpcBlockSource::load_block(std::uint64_t height) {
    const json hash = client_.call("getblockhash", json::array({height}));
    const json block = client_.call("getblock", json::array({hash, 2}));
    if (!block.is_object() || !block.contains("tx") || !block["tx"].is_array()) {
        throw Error(ErrorCode::RpcFailure, "getblock " + std::to_string(height) + ": missing tx array");
    }
    block_txs_.assign(block["tx"].begin(), block["tx"].end());
    loaded_height_ = height;
    // A block only spends outputs created earlier, so caching the whole block
    // up front is equivalent to caching tx by tx and lets a mid-block resume
    // see the same outputs.
    for (const auto& tx : block_txs_) {
        const std::string txid = tx.value("txid", std::string());
        for (const auto& vout : tx.value("vout", json::array())) {
            if (auto addr = output_address(vout)) {
                cache_.put(outpoint(txid, vout.value("n", std::uint64_t{0})), {*addr, to_satoshi(vout["value"])});
            }
        }
    }
}

std::optional<TxEndpoint> RpcBlockSource::resolve(const std::string& txid, std::uint64_t vout) {
    if (auto hit = cache_.get(outpoint(txid, vout))) return hit;
    json prev;
    try {
        prev = client_.call("getrawtransaction", json::array({txid, true}));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::EndpointUnreachable) throw;
        return std::nullopt;
    }
    for (const auto& out : prev.value("vout", json::array())) {
        if (out.value("n", std::uint64_t{0}) != vout) continue;
        auto addr = output_address(out);
        if (!addr) return std::nullopt;
        TxEndpoint ep{*addr, to_satoshi(out["value"])};
        cache_.put(outpoint(txid, vout), ep);
        return ep;
    }
    return std::nullopt;
}

std::optional<TxRecord> RpcBlockSource::next() {
    while (cursor_.position <= to_height_) {
        if (loaded_height_ != cursor_.position) load_block(cursor_.position);
        while (cursor_.sub < block_txs_.size()) {
            const json& raw = block_txs_[cursor_.sub];
            ++cursor_.sub;

            TxRecord tx;
            tx.txid = raw.value("txid", std::string());
            tx.height = cursor_.position;
            tx.week = client_.config().mapping.week_of(tx.height);
            bool unresolved = false;
            for (const auto& vin : raw.value("vin", json::array())) {
                if (vin.contains("coinbase")) continue;
                if (auto p = vin.find("prevout"); p != vin.end()) {
                    if (auto addr = output_address(*p)) {
                        tx.inputs.push_back({*addr, to_satoshi((*p)["value"])});
                        continue;
                    }
                }
                auto ep = resolve(vin.value("txid", std::string()), vin.value("vout", std::uint64_t{0}));
                if (!ep) {
                    unresolved = true;
                    break;
                }
                tx.inputs.push_back(std::move(*ep));
            }
            if (unresolved) {
                ++skipped_unresolved_;
                continue;
            }
            for (const auto& vout : raw.value("vout", json::array())) {
                if (auto addr = output_address(vout)) {
                    tx.outputs.push_back({*addr, to_satoshi(vout["value"])});
                }
            }
            if (tx.outputs.empty()) {
                ++skipped_no_address_;
                continue;
            }
            validate_record(tx, client_.config().mapping, cursor_.sub);
            return tx;
        }
        ++cursor_.position;
        cursor_.sub = 0;
    }
    return std::nullopt;
}

}  // namespace bunforge
