#pragma once

#include "bunforge/clustering.hpp"
#include "bunforge/graph.hpp"
#include "bunforge/source.hpp"
#include "bunforge/synthetic.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bunforge {

struct WeekRange {
    std::uint64_t first = 0;
    std::uint64_t last = 0;

    /// Parses "A..B" (or a single week "A").
    static WeekRange parse(std::string_view text);
    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const WeekRange&, const WeekRange&) = default;
};

/// Every setting has a single key shared by the CLI flag (--key) and the
/// key=value config file.
struct PipelineConfig {
    std::filesystem::path data_dir = "bunforge-data";
    std::optional<WeekRange> weeks;  // default: every week in the source
    SnapshotMode mode = SnapshotMode::Cumulative;
    bool as_of = false;              // resolve users per week instead of against the final state
    bool drop_isolated = false;

    SourceKind source = SourceKind::Synthetic;
    std::filesystem::path input;     // file source
    SyntheticConfig synthetic = [] {  // seed, n_tx, mix, txs_per_block
        SyntheticConfig c;
        c.n_tx = 100'000;
        return c;
    }();
    std::string rpc_url = "http://127.0.0.1:8332";
    std::string rpc_auth;
    std::uint64_t rpc_from = 0;
    std::uint64_t rpc_to = 0;
    std::uint64_t rpc_timeout_ms = 5000;
    WeekMapping mapping;

    double damping = 0.85;
    double pr_tolerance = 1e-10;
    std::uint32_t pr_max_iter = 100;
    std::uint32_t hits_k = 20;
    std::size_t top_c = 10;
    std::size_t filter_degree = 2;

    /// Applies one setting; throws Error(InvalidConfig) for unknown keys or bad values.
    void set(std::string_view key, std::string_view value);
    /// Applies every `key = value` line of a config file ('#' starts a comment).
    void load_file(const std::filesystem::path& path);
    /// Canonical `key=value` lines of every setting that affects outputs.
    [[nodiscard]] std::string canonical() const;
    void validate() const;
};

enum class Stage { Ingest, Cluster, Graph, Metrics, Summary, Eval };

std::string_view to_string(Stage stage) noexcept;

/// Directory schema of a data dir. Every week artifact is a directory holding
/// its files plus a CHECKSUM file; it is written under a ".tmp" name and
/// renamed into place, so it is either complete or absent.
struct StoreLayout {
    std::filesystem::path root;

    [[nodiscard]] std::filesystem::path raw(std::uint64_t week) const;
    [[nodiscard]] std::filesystem::path clusters(std::uint64_t week) const;
    [[nodiscard]] std::filesystem::path graphs(std::uint64_t week) const;
    [[nodiscard]] std::filesystem::path metrics(std::uint64_t week) const;
    [[nodiscard]] std::filesystem::path summary() const;
    [[nodiscard]] std::filesystem::path eval() const;
    [[nodiscard]] std::filesystem::path manifest() const;

    /// Name relative to root, e.g. "clusters/week-0".
    [[nodiscard]] std::string name(const std::filesystem::path& artifact) const;
};

struct RunManifest {
    std::string tool_version;
    std::string config_hash;
    std::string source;
    WeekRange weeks;
    std::string mode;
    std::map<std::string, std::string> checksums;  // artifact name -> content digest

    [[nodiscard]] nlohmann::ordered_json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
    friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

struct RunReport {
    RunManifest manifest;
    std::vector<std::string> executed;  // "stage:artifact" for every stage run
    std::vector<std::string> skipped;
};

/// Runs ingest -> cluster -> graph -> metrics -> summary (-> eval for
/// synthetic sources) up to `until`, reusing week artifacts whose content and
/// recorded inputs still match. A corrupted artifact raises
/// Error(ChecksumMismatch) naming it; a failing stage raises
/// Error(StageFailure) naming stage and week after removing partial output.
RunReport run(const PipelineConfig& config, Stage until = Stage::Eval);

/// Verifies and replays cluster checkpoints for weeks 0..last_week.
ClusterState load_clusters(const StoreLayout& layout, std::uint64_t last_week);

/// Partition export `user_id,address` and merge-log export `week,survivor,absorbed`.
void write_partition_csv(const ClusterState& state, const std::filesystem::path& path);
void write_merge_log_csv(const ClusterState& state, const std::filesystem::path& path);

std::string_view tool_version() noexcept;

}  // namespace bunforge
