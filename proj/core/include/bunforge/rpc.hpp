#pragma once

#include "bunforge/source.hpp"
#include "bunforge/tx_record.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <deque>
#include <list>
#include <memory>
#include <string>
#include <unordered_map>

namespace bunforge {

struct RpcConfig {
    /// e.g. "http://127.0.0.1:8332" or "http://host:8332/wallet/x".
    std::string url = "http://127.0.0.1:8332";
    /// "user:password" for HTTP basic auth; empty disables it.
    std::string auth;
    std::chrono::milliseconds timeout{5000};
    std::size_t lru_capacity = 1u << 20;
    WeekMapping mapping;

    /// Fills url/auth from BUNFORGE_RPC_URL / BUNFORGE_RPC_AUTH when set.
    static RpcConfig from_env(RpcConfig base);
    static RpcConfig from_env();
};

/// Minimal JSON-RPC 1.0 client over HTTP.
class RpcClient {
  public:
    explicit RpcClient(RpcConfig config);
    ~RpcClient();
    RpcClient(const RpcClient&) = delete;
    RpcClient& operator=(const RpcClient&) = delete;

    nlohmann::json call(const std::string& method, nlohmann::json params);

    [[nodiscard]] const RpcConfig& config() const noexcept { return config_; }

  private:
    struct Impl;
    RpcConfig config_;
    std::unique_ptr<Impl> impl_;
};

/// Bounded least-recently-used map from "txid:vout" to the spent output.
class OutputCache {
  public:
    explicit OutputCache(std::size_t capacity) : capacity_(capacity) {}

    void put(const std::string& key, TxEndpoint value);
    std::optional<TxEndpoint> get(const std::string& key);
    [[nodiscard]] std::size_t size() const noexcept { return index_.size(); }

  private:
    using Entry = std::pair<std::string, TxEndpoint>;
    std::size_t capacity_;
    std::list<Entry> order_;
    std::unordered_map<std::string, std::list<Entry>::iterator> index_;
};

/// Streams the transactions of blocks [from_height, to_height] in block order,
/// resolving input addresses through the previous outputs they spend.
/// Transactions whose inputs cannot be resolved, or that pay no decodable
/// address, are skipped and counted.
class RpcBlockSource final : public RecordSource {
  public:
    RpcBlockSource(RpcConfig config, std::uint64_t from_height, std::uint64_t to_height);
    RpcBlockSource(RpcConfig config, std::uint64_t to_height, SourceCursor resume);

    std::optional<TxRecord> next() override;
    [[nodiscard]] SourceCursor cursor() const override { return cursor_; }

    [[nodiscard]] std::uint64_t skipped_unresolved() const noexcept { return skipped_unresolved_; }
    [[nodiscard]] std::uint64_t skipped_no_address() const noexcept { return skipped_no_address_; }

  private:
    void load_block(std::uint64_t height);
    std::optional<TxEndpoint> resolve(const std::string& txid, std::uint64_t vout);

    RpcClient client_;
    std::uint64_t to_height_;
    SourceCursor cursor_;
    OutputCache cache_;
    std::optional<std::uint64_t> loaded_height_;
    std::vector<nlohmann::json> block_txs_;
    std::uint64_t skipped_unresolved_ = 0;
    std::uint64_t skipped_no_address_ = 0;
};

}  // namespace bunforge
