#include "bunforge/pipeline.hpp"

#include "bunforge/checksum.hpp"
#include "bunforge/components.hpp"
#include "bunforge/csv.hpp"
#include "bunforge/error.hpp"
#include "bunforge/eval.hpp"
#include "bunforge/metrics.hpp"
#include "bunforge/rpc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <deque>
#include <functional>
#include <future>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#ifndef BUNFORGE_VERSION
#define BUNFORGE_VERSION "0.0.0"
#endif

namespace bunforge {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view tool_version() noexcept { return BUNFORGE_VERSION; }

// ---------------------------------------------------------------------------
// Configuration

WeekRange WeekRange::parse(std::string_view text) {
    const auto dots = text.find("..");
    try {
        if (dots == std::string_view::npos) {
            const auto w = csv::parse_u64(text);
            return {w, w};
        }
        WeekRange r{csv::parse_u64(text.substr(0, dots)), csv::parse_u64(text.substr(dots + 2))};
        if (r.first > r.last) throw Error(ErrorCode::InvalidConfig, "week range " + std::string(text) + " is empty");
        return r;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidConfig) throw;
        throw Error(ErrorCode::InvalidConfig, "weeks must look like A..B, got '" + std::string(text) + "'");
    }
}

std::string WeekRange::to_string() const { return std::to_string(first) + ".." + std::to_string(last); }

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes" || v.empty()) return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorCode::InvalidConfig, std::string(key) + ": expected true/false");
}

std::uint64_t parse_uint(std::string_view key, std::string_view v) {
    try {
        return csv::parse_u64(v);
    } catch (const Error&) {
        throw Error(ErrorCode::InvalidConfig, std::string(key) + ": expected a non-negative integer, got '" +
                                                  std::string(v) + "'");
    }
}

double parse_real(std::string_view key, std::string_view v) {
    try {
        const double d = csv::parse_double(v);
        if (!std::isfinite(d)) throw Error(ErrorCode::InvalidConfig, "");
        return d;
    } catch (const Error&) {
        throw Error(ErrorCode::InvalidConfig, std::string(key) + ": expected a number, got '" + std::string(v) + "'");
    }
}

}  // namespace

void PipelineConfig::set(std::string_view key, std::string_view raw) {
    const std::string value = trim(raw);
    if (key == "data-dir") data_dir = value;
    else if (key == "weeks") weeks = WeekRange::parse(value);
    else if (key == "mode") mode = parse_snapshot_mode(value);
    else if (key == "as-of") as_of = parse_bool(key, value);
    else if (key == "drop-isolated") drop_isolated = parse_bool(key, value);
    else if (key == "source") {
        if (value == "synthetic") source = SourceKind::Synthetic;
        else if (value == "file") source = SourceKind::File;
        else if (value == "rpc") source = SourceKind::Rpc;
        else throw Error(ErrorCode::InvalidConfig, "source must be synthetic, file or rpc");
    }
    else if (key == "input") input = value;
    else if (key == "seed") synthetic.seed = parse_uint(key, value);
    else if (key == "n-tx") synthetic.n_tx = parse_uint(key, value);
    else if (key == "mix") {
        try {
            synthetic.mix = PatternMix::parse(value);
        } catch (const Error& e) {
            throw Error(ErrorCode::InvalidConfig, std::string("mix: ") + e.what());
        }
    }
    else if (key == "txs-per-block") synthetic.txs_per_block = parse_uint(key, value);
    else if (key == "change-noise") synthetic.change_noise = parse_real(key, value);
    else if (key == "rpc-url") rpc_url = value;
    else if (key == "rpc-auth") rpc_auth = value;
    else if (key == "rpc-from") rpc_from = parse_uint(key, value);
    else if (key == "rpc-to") rpc_to = parse_uint(key, value);
    else if (key == "rpc-timeout-ms") rpc_timeout_ms = parse_uint(key, value);
    else if (key == "genesis-height") mapping.genesis_height = parse_uint(key, value);
    else if (key == "blocks-per-week") mapping.blocks_per_week = parse_uint(key, value);
    else if (key == "damping") damping = parse_real(key, value);
    else if (key == "pr-tol") pr_tolerance = parse_real(key, value);
    else if (key == "pr-max-iter") pr_max_iter = static_cast<std::uint32_t>(parse_uint(key, value));
    else if (key == "hits-k") hits_k = static_cast<std::uint32_t>(parse_uint(key, value));
    else if (key == "top-c") top_c = parse_uint(key, value);
    else if (key == "filter-degree") filter_degree = parse_uint(key, value);
    else throw Error(ErrorCode::InvalidConfig, "unknown setting '" + std::string(key) + "'");
}

void PipelineConfig::load_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read config " + path.string());
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const std::string body = trim(std::string_view(line).substr(0, hash));
        if (body.empty() || body.front() == '[') continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::InvalidConfig, path.string() + ":" + std::to_string(line_no) + ": expected key = value");
        }
        std::string value = trim(std::string_view(body).substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        std::string key = trim(std::string_view(body).substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        set(key, value);
    }
}

std::string PipelineConfig::canonical() const {
    std::ostringstream out;
    out.precision(17);
    out << "mode=" << to_string(mode) << '\n'
        << "as-of=" << as_of << '\n'
        << "drop-isolated=" << drop_isolated << '\n'
        << "weeks=" << (weeks ? weeks->to_string() : std::string("all")) << '\n'
        << "source=" << to_string(source) << '\n';
    switch (source) {
        case SourceKind::Synthetic:
            out << "seed=" << synthetic.seed << '\n'
                << "n-tx=" << synthetic.n_tx << '\n'
                << "mix=" << synthetic.mix.to_string() << '\n'
                << "txs-per-block=" << synthetic.txs_per_block << '\n'
                << "change-noise=" << synthetic.change_noise << '\n';
            break;
        case SourceKind::File:
            break;  // identified by content digest
        case SourceKind::Rpc:
            out << "rpc-url=" << rpc_url << '\n' << "rpc-from=" << rpc_from << '\n' << "rpc-to=" << rpc_to << '\n';
            break;
    }
    out << "genesis-height=" << mapping.genesis_height << '\n'
        << "blocks-per-week=" << mapping.blocks_per_week << '\n'
        << "damping=" << damping << '\n'
        << "pr-tol=" << pr_tolerance << '\n'
        << "pr-max-iter=" << pr_max_iter << '\n'
        << "hits-k=" << hits_k << '\n'
        << "top-c=" << top_c << '\n'
        << "filter-degree=" << filter_degree << '\n';
    return out.str();
}

void PipelineConfig::validate() const {
    if (data_dir.empty()) throw Error(ErrorCode::InvalidConfig, "data-dir is empty");
    if (mapping.blocks_per_week == 0) throw Error(ErrorCode::InvalidConfig, "blocks-per-week must be positive");
    if (!(damping > 0.0 && damping < 1.0)) throw Error(ErrorCode::InvalidConfig, "damping must lie in (0, 1)");
    if (!(pr_tolerance > 0.0)) throw Error(ErrorCode::InvalidConfig, "pr-tol must be positive");
    if (source == SourceKind::File && input.empty()) {
        throw Error(ErrorCode::InvalidConfig, "file source needs --input");
    }
    if (source == SourceKind::Synthetic && synthetic.txs_per_block == 0) {
        throw Error(ErrorCode::InvalidConfig, "txs-per-block must be positive");
    }
    if (source == SourceKind::Rpc && rpc_from > rpc_to) {
        throw Error(ErrorCode::InvalidConfig, "rpc-from exceeds rpc-to");
    }
}

std::string_view to_string(Stage stage) noexcept {
    switch (stage) {
        case Stage::Ingest: return "ingest";
        case Stage::Cluster: return "cluster";
        case Stage::Graph: return "graph";
        case Stage::Metrics: return "metrics";
        case Stage::Summary: return "summary";
        case Stage::Eval: return "eval";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Store layout and manifest

namespace {

std::string week_dir(std::uint64_t week) { return "week-" + std::to_string(week); }

}  // namespace

fs::path StoreLayout::raw(std::uint64_t week) const { return root / "raw" / week_dir(week); }
fs::path StoreLayout::clusters(std::uint64_t week) const { return root / "clusters" / week_dir(week); }
fs::path StoreLayout::graphs(std::uint64_t week) const { return root / "graphs" / week_dir(week); }
fs::path StoreLayout::metrics(std::uint64_t week) const { return root / "metrics" / week_dir(week); }
fs::path StoreLayout::summary() const { return root / "metrics" / "summary"; }
fs::path StoreLayout::eval() const { return root / "eval"; }
fs::path StoreLayout::manifest() const { return root / "manifest.json"; }

std::string StoreLayout::name(const fs::path& artifact) const {
    return fs::relative(artifact, root).generic_string();
}

nlohmann::ordered_json RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["tool_version"] = tool_version;
    j["config_hash"] = config_hash;
    j["source"] = source;
    j["weeks"] = {{"first", weeks.first}, {"last", weeks.last}};
    j["mode"] = mode;
    nlohmann::ordered_json stages = nlohmann::ordered_json::object();
    for (const auto& [name, digest] : checksums) stages[name] = digest;
    j["checksums"] = std::move(stages);
    return j;
}

RunManifest RunManifest::from_json(const json& j) {
    RunManifest m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.source = j.at("source").get<std::string>();
    m.weeks = {j.at("weeks").at("first").get<std::uint64_t>(), j.at("weeks").at("last").get<std::uint64_t>()};
    m.mode = j.at("mode").get<std::string>();
    for (const auto& [name, digest] : j.at("checksums").items()) m.checksums[name] = digest.get<std::string>();
    return m;
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {

constexpr std::string_view kChecksumFile = "CHECKSUM";

enum class ArtifactState { Absent, Valid, Stale };

struct ArtifactCheck {
    ArtifactState state = ArtifactState::Absent;
    std::string content;  // digest, when present
};

std::pair<std::string, std::string> read_checksum_file(const fs::path& dir, const StoreLayout& layout) {
    std::ifstream in(dir / kChecksumFile);
    std::string tag_c, content, tag_i, inputs;
    if (!in || !(in >> tag_c >> content >> tag_i >> inputs) || tag_c != "content" || tag_i != "inputs") {
        throw Error(ErrorCode::ChecksumMismatch, layout.name(dir) + ": missing or unreadable CHECKSUM");
    }
    return {content, inputs};
}

/// Verifies content; a present artifact whose content digest does not match is
/// corruption, one whose recorded inputs differ is merely stale.
ArtifactCheck check_artifact(const fs::path& dir, const std::string& inputs, const StoreLayout& layout) {
    if (!fs::exists(dir)) return {};
    const auto [content, recorded_inputs] = read_checksum_file(dir, layout);
    if (sha256_tree(dir, kChecksumFile) != content) {
        throw Error(ErrorCode::ChecksumMismatch, layout.name(dir) + ": content does not match its checksum");
    }
    return {recorded_inputs == inputs ? ArtifactState::Valid : ArtifactState::Stale, content};
}

fs::path tmp_path(const fs::path& dir) { return fs::path(dir.string() + ".tmp"); }

fs::path begin_artifact(const fs::path& dir) {
    const fs::path tmp = tmp_path(dir);
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    return tmp;
}

std::string commit_artifact(const fs::path& dir, const std::string& inputs) {
    const fs::path tmp = tmp_path(dir);
    const std::string content = sha256_tree(tmp, kChecksumFile);
    {
        std::ofstream out(tmp / kChecksumFile, std::ios::binary | std::ios::trunc);
        out << "content " << content << "\ninputs " << inputs << "\n";
        if (!out) throw Error(ErrorCode::Io, "cannot write checksum in " + tmp.string());
    }
    fs::remove_all(dir);
    fs::rename(tmp, dir);
    return content;
}

std::string digest_of(std::initializer_list<std::string_view> parts) {
    Sha256 h;
    for (const auto p : parts) h.update(p).update("\n");
    return h.hex_digest();
}

void remove_leftover_tmp(const fs::path& dir) {
    if (!fs::exists(dir)) return;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".tmp") fs::remove_all(entry.path());
    }
}

template <typename F>
void for_each_record(const fs::path& jsonl, const WeekMapping& mapping, F&& f) {
    JsonlFileSource src(jsonl, mapping);
    while (auto tx = src.next()) f(*tx);
}

std::unique_ptr<RecordSource> open_source(const PipelineConfig& config) {
    switch (config.source) {
        case SourceKind::Synthetic: {
            SyntheticConfig sc = config.synthetic;
            sc.mapping = config.mapping;
            return std::make_unique<SyntheticSource>(sc);
        }
        case SourceKind::File: return std::make_unique<JsonlFileSource>(config.input, config.mapping);
        case SourceKind::Rpc: {
            RpcConfig rc;
            rc.url = config.rpc_url;
            rc.auth = config.rpc_auth;
            rc.timeout = std::chrono::milliseconds(config.rpc_timeout_ms);
            rc.mapping = config.mapping;
            return std::make_unique<RpcBlockSource>(rc, config.rpc_from, config.rpc_to);
        }
    }
    throw Error(ErrorCode::InvalidConfig, "unknown source");
}

std::string source_descriptor(const PipelineConfig& config) {
    switch (config.source) {
        case SourceKind::Synthetic:
            return "synthetic seed=" + std::to_string(config.synthetic.seed) +
                   " n_tx=" + std::to_string(config.synthetic.n_tx);
        case SourceKind::File:
            if (!fs::exists(config.input)) throw Error(ErrorCode::InvalidConfig, "input " + config.input.string() + " not found");
            return "file sha256=" + sha256_file(config.input);
        case SourceKind::Rpc:
            return "rpc " + config.rpc_url + " heights " + std::to_string(config.rpc_from) + ".." +
                   std::to_string(config.rpc_to);
    }
    return "unknown";
}

// Cluster checkpoint: addresses first seen this week (index order) and the
// merges performed this week.
void write_cluster_delta(const fs::path& dir, const ClusterState& state, std::uint64_t week,
                         std::size_t first_address, std::size_t first_merge) {
    {
        std::ofstream out(dir / "addresses.jsonl", std::ios::binary);
        for (std::size_t i = first_address; i < state.address_count(); ++i) {
            out << json(state.address(static_cast<AddressIndex>(i))).dump() << '\n';
        }
        if (!out) throw Error(ErrorCode::Io, "cannot write addresses in " + dir.string());
    }
    csv::Writer merges(dir / "merges.csv");
    merges.row({"week", "survivor", "absorbed"});
    const auto log = state.merge_log();
    for (std::size_t i = first_merge; i < log.size(); ++i) {
        merges.field(log[i].week).field(std::uint64_t{log[i].survivor}).field(std::uint64_t{log[i].absorbed}).end_row();
    }
    merges.close();
    std::ofstream meta(dir / "meta.json", std::ios::binary);
    meta << nlohmann::ordered_json{{"week", week},
                                   {"first_index", first_address},
                                   {"address_count", state.address_count() - first_address},
                                   {"merge_count", log.size() - first_merge}}
                .dump()
         << '\n';
}

void apply_cluster_delta(const fs::path& dir, ClusterState& state, const StoreLayout& layout) {
    const std::string name = layout.name(dir);
    std::ifstream meta_in(dir / "meta.json");
    const json meta = json::parse(meta_in, nullptr, false);
    if (meta.is_discarded() || meta.value("first_index", std::uint64_t{0}) != state.address_count()) {
        throw Error(ErrorCode::StateMismatch, name + ": checkpoint does not continue the previous week");
    }
    std::ifstream in(dir / "addresses.jsonl");
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto before = state.address_count();
        state.register_address(json::parse(line).get<std::string>());
        if (state.address_count() == before) throw Error(ErrorCode::StateMismatch, name + ": duplicate address");
    }
    const auto merges = csv::read_table(dir / "merges.csv");
    for (const auto& row : merges.rows) {
        const auto a = csv::parse_u64(row.at(1));
        const auto b = csv::parse_u64(row.at(2));
        if (a >= state.address_count() || b >= state.address_count() ||
            !state.unite(static_cast<AddressIndex>(a), static_cast<AddressIndex>(b), csv::parse_u64(row.at(0)))) {
            throw Error(ErrorCode::StateMismatch, name + ": merge log does not replay");
        }
    }
}

// Per-week metric rows (without headers).
struct WeekMetricRows {
    std::string components;
    std::string ratios;
    std::string metrics;
    std::string gini_filtered;
    std::string topc;
};

std::optional<double> safe_gini(std::span<const double> values) {
    try {
        return gini(values);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ZeroMean) return std::nullopt;
        throw;
    }
}

WeekMetricRows compute_week_metrics(const UserGraph& g, const PipelineConfig& config) {
    using csv::format_double;
    using csv::format_optional;
    const std::string week = std::to_string(g.week());
    WeekMetricRows rows;

    ComponentStats cs;
    cs.week = g.week();
    if (!g.empty()) cs = component_stats(g);
    rows.components = week + "," + std::to_string(cs.n_wcc) + "," + std::to_string(cs.n_scc) + "," +
                      std::to_string(cs.lwcc_size) + "," + std::to_string(cs.lscc_size) + "," +
                      std::to_string(cs.second_wcc_size) + "," + std::to_string(cs.second_scc_size) + "," +
                      std::to_string(cs.n_nodes) + "\n";
    auto minus_one = [](std::uint64_t n) { return n == 0 ? std::string("0") : std::to_string(n - 1); };
    const std::optional<double> lwcc_rel = g.empty() ? std::nullopt : std::optional<double>(cs.lwcc_relative());
    const std::optional<double> lscc_rel = g.empty() ? std::nullopt : std::optional<double>(cs.lscc_relative());
    rows.ratios = week + "," + minus_one(cs.n_wcc) + "," + minus_one(cs.n_scc) + "," + format_optional(lwcc_rel) +
                  "," + format_optional(lscc_rel) + "," + format_optional(cs.wcc_ratio()) + "," +
                  format_optional(cs.scc_ratio()) + "\n";

    const auto quad = assortativity_quad(g);
    const std::size_t filtered = degree_filter_count(g, config.filter_degree);
    std::optional<double> pr_gini, auth_gini, hub_gini, pr_gini_f, auth_gini_f, hub_gini_f;
    if (!g.empty()) {
        PageRankOptions pro;
        pro.damping = config.damping;
        pro.tolerance = config.pr_tolerance;
        pro.max_iterations = config.pr_max_iter;
        const auto pr = pagerank(g, pro);
        HitsOptions ho;
        ho.iterations = config.hits_k;
        const auto h = hits(g, ho);

        pr_gini = safe_gini(pr.values);
        auth_gini = safe_gini(h.authorities);
        hub_gini = safe_gini(h.hubs);

        std::vector<double> f_pr, f_auth, f_hub;
        for (NodeIndex v = 0; v < g.node_count(); ++v) {
            if (g.in_degree(v) + g.out_degree(v) > config.filter_degree) {
                f_pr.push_back(pr.values[v]);
                f_auth.push_back(h.authorities[v]);
                f_hub.push_back(h.hubs[v]);
            }
        }
        pr_gini_f = safe_gini(f_pr);
        auth_gini_f = safe_gini(f_auth);
        hub_gini_f = safe_gini(f_hub);

        auto emit = [&](std::string_view kind, std::span<const double> scores) {
            const auto top = top_c(g, scores, config.top_c);
            for (std::size_t i = 0; i < top.size(); ++i) {
                rows.topc += week + "," + std::string(kind) + "," + std::to_string(i + 1) + "," +
                             std::to_string(top[i].user.value) + "," + format_double(top[i].score) + "\n";
            }
        };
        emit("pagerank", pr.values);
        emit("hits_authority", h.authorities);
        emit("hits_hub", h.hubs);
    }
    rows.metrics = week + "," + format_optional(quad.out_out) + "," + format_optional(quad.out_in) + "," +
                   format_optional(quad.in_out) + "," + format_optional(quad.in_in) + "," +
                   format_optional(pr_gini) + "," + format_optional(auth_gini) + "," + format_optional(hub_gini) +
                   "," + std::to_string(filtered) + "," + std::to_string(g.node_count()) + "\n";
    rows.gini_filtered = week + "," + format_optional(pr_gini_f) + "," + format_optional(auth_gini_f) + "," +
                         format_optional(hub_gini_f) + "\n";
    return rows;
}

constexpr std::string_view kComponentsHeader = "week,n_wcc,n_scc,lwcc,lscc,wcc2,scc2,n_nodes\n";
constexpr std::string_view kRatiosHeader =
    "week,n_wcc_minus_1,n_scc_minus_1,lwcc_relative,lscc_relative,wcc_ratio,scc_ratio\n";
constexpr std::string_view kMetricsHeader =
    "week,r_out_out,r_out_in,r_in_out,r_in_in,pr_gini,hits_auth_gini,hits_hub_gini,filtered_nodes,total_nodes\n";
constexpr std::string_view kGiniFilteredHeader = "week,pr_gini,hits_auth_gini,hits_hub_gini\n";
constexpr std::string_view kTopcHeader = "week,kind,rank,user_id,score\n";
constexpr std::string_view kPatternsHeader = "week,1-1,1-2,1-3,other\n";

void write_text(const fs::path& path, std::string_view header, std::string_view body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << header << body;
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

std::string read_body(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    std::string header;
    std::getline(in, header);
    std::ostringstream rest;
    rest << in.rdbuf();
    return rest.str();
}

UserGraph without_isolated(const UserGraph& g) {
    std::vector<UserId> nodes;
    std::vector<UserEdge> edges;
    for (NodeIndex v = 0; v < g.node_count(); ++v) {
        if (g.in_degree(v) + g.out_degree(v) > 0) nodes.push_back(g.id(v));
    }
    g.for_each_edge([&](NodeIndex u, NodeIndex v) { edges.push_back({g.id(u), g.id(v)}); });
    return UserGraph::from_users(g.week(), std::move(nodes), std::move(edges));
}

// Orders report entries by stage, then week, independent of worker timing.
void sort_report(RunReport& report) {
    auto key = [](const std::string& entry) {
        const std::string stage = entry.substr(0, entry.find(':'));
        std::size_t rank = 0;
        for (const Stage s : {Stage::Ingest, Stage::Cluster, Stage::Graph, Stage::Metrics, Stage::Summary, Stage::Eval}) {
            if (to_string(s) == stage) break;
            ++rank;
        }
        std::uint64_t week = std::numeric_limits<std::uint64_t>::max();
        if (const auto pos = entry.rfind("week-"); pos != std::string::npos) {
            week = std::stoull(entry.substr(pos + 5));
        }
        return std::tuple(rank, week, entry);
    };
    for (auto* list : {&report.executed, &report.skipped}) {
        std::sort(list->begin(), list->end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
    }
}

// ---------------------------------------------------------------------------
// The run itself

class Runner {
  public:
    Runner(const PipelineConfig& config, Stage until)
        : config_(config), until_(until), layout_{config.data_dir} {}

    RunReport run();

  private:
    template <typename F>
    void stage(Stage s, const fs::path& artifact, F&& body) {
        try {
            body();
        } catch (const Error& e) {
            fs::remove_all(tmp_path(artifact));
            if (e.code() == ErrorCode::ChecksumMismatch) throw;
            throw Error(ErrorCode::StageFailure, "stage " + std::string(to_string(s)) + " failed at " +
                                                     layout_.name(artifact) + ": " + e.what());
        } catch (const std::exception& e) {
            fs::remove_all(tmp_path(artifact));
            throw Error(ErrorCode::StageFailure, "stage " + std::string(to_string(s)) + " failed at " +
                                                     layout_.name(artifact) + ": " + e.what());
        }
    }

    void record(Stage s, const fs::path& artifact, bool executed, const std::string& digest) {
        const std::string name = layout_.name(artifact);
        const std::lock_guard lock(record_mutex_);
        report_.manifest.checksums[name] = digest;
        (executed ? report_.executed : report_.skipped).push_back(std::string(to_string(s)) + ":" + name);
    }

    void ingest();
    void cluster();
    void graphs_final_mode();
    void graph_week(std::uint64_t week, const ClusterState& state, const std::string& cluster_digest,
                    const std::function<UserGraph()>& build);
    void metrics_week(std::uint64_t week, const std::string& graph_digest, const UserGraph* built);
    void queue_metrics(std::uint64_t week, std::string graph_digest, std::optional<UserGraph> built);
    void drain_metrics();
    void summary();
    void eval();

    [[nodiscard]] fs::path raw_file(std::uint64_t w) const { return layout_.raw(w) / "txs.jsonl"; }
    [[nodiscard]] std::string graph_inputs(std::uint64_t week, const std::string& cluster_digest) const;

    const PipelineConfig& config_;
    Stage until_;
    StoreLayout layout_;
    std::string config_hash_;
    WeekRange weeks_;
    RunReport report_;
    ClusterState state_;
    std::vector<std::string> raw_digest_;
    std::vector<std::string> cluster_digest_;
    std::vector<std::string> metrics_digest_;

    // Metrics for finished graphs run on worker tasks while the next week's
    // graph is built. The bound also caps how many graphs are held at once.
    std::mutex record_mutex_;
    std::deque<std::future<void>> pending_;
    std::size_t max_pending_ = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 4);
};

void Runner::ingest() {
    // Resolve the last week: explicit, from a matching previous manifest, or
    // by reading the whole source.
    std::optional<std::uint64_t> last;
    if (config_.weeks) last = config_.weeks->last;
    if (!last && fs::exists(layout_.manifest())) {
        std::ifstream in(layout_.manifest());
        const json j = json::parse(in, nullptr, false);
        if (!j.is_discarded() && j.value("config_hash", std::string()) == config_hash_) {
            last = RunManifest::from_json(j).weeks.last;
        }
    }

    std::vector<bool> needed;
    bool any_needed = !last.has_value();
    if (last) {
        needed.assign(*last + 1, true);
        raw_digest_.assign(*last + 1, {});
        for (std::uint64_t w = 0; w <= *last; ++w) {
            const auto c = check_artifact(layout_.raw(w), config_hash_, layout_);
            if (c.state == ArtifactState::Valid) {
                needed[w] = false;
                raw_digest_[w] = c.content;
            } else {
                any_needed = true;
            }
        }
    }

    if (any_needed) {
        auto source = open_source(config_);
        std::optional<std::uint64_t> open_week;
        std::ofstream out;
        PatternHistogram histogram;
        std::uint64_t next_week = 0;  // first week without an artifact decision yet

        auto is_needed = [&](std::uint64_t w) { return !last || needed[w]; };
        auto finish_week = [&](std::uint64_t w) {
            const fs::path dir = layout_.raw(w);
            if (!is_needed(w)) {
                record(Stage::Ingest, dir, false, raw_digest_[w]);
                return;
            }
            stage(Stage::Ingest, dir, [&] {
                if (open_week != w) {
                    begin_artifact(dir);
                    std::ofstream(tmp_path(dir) / "txs.jsonl", std::ios::binary);
                    histogram = {};
                } else {
                    out.close();
                    if (!out) throw Error(ErrorCode::Io, "failed writing " + raw_file(w).string());
                }
                std::string row = std::to_string(w);
                for (const auto c : histogram.counts) row += "," + std::to_string(c);
                write_text(tmp_path(dir) / "patterns.csv", kPatternsHeader, row + "\n");
                const auto digest = commit_artifact(dir, config_hash_);
                if (raw_digest_.size() <= w) raw_digest_.resize(w + 1);
                raw_digest_[w] = digest;
                record(Stage::Ingest, dir, true, digest);
            });
            histogram = {};
        };

        // Source errors are attributed to the week being assembled.
        auto pull = [&]() -> std::optional<TxRecord> {
            std::optional<TxRecord> tx;
            stage(Stage::Ingest, layout_.raw(next_week), [&] { tx = source->next(); });
            return tx;
        };
        while (auto tx = pull()) {
            if (last && tx->week > *last) break;
            while (next_week < tx->week) {
                finish_week(next_week);
                open_week.reset();
                ++next_week;
            }
            if (!is_needed(tx->week)) continue;
            if (open_week != tx->week) {
                stage(Stage::Ingest, layout_.raw(tx->week), [&] {
                    const fs::path tmp = begin_artifact(layout_.raw(tx->week));
                    out = std::ofstream(tmp / "txs.jsonl", std::ios::binary);
                    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
                });
                open_week = tx->week;
                histogram = {};
            }
            out << serialize_record(*tx) << '\n';
            histogram.add(*tx);
        }
        const std::uint64_t final_week = last ? *last : (open_week ? *open_week : (next_week == 0 ? 0 : next_week - 1));
        for (; next_week <= final_week; ++next_week) {
            finish_week(next_week);
            open_week.reset();
        }
        last = final_week;
    } else {
        for (std::uint64_t w = 0; w <= *last; ++w) record(Stage::Ingest, layout_.raw(w), false, raw_digest_[w]);
    }

    weeks_ = {config_.weeks ? config_.weeks->first : 0, *last};
    if (weeks_.first > weeks_.last) {
        throw Error(ErrorCode::InvalidConfig, "week range starts after the last week of the source");
    }
    raw_digest_.resize(weeks_.last + 1);
}

std::string Runner::graph_inputs(std::uint64_t week, const std::string& cluster_digest) const {
    Sha256 h;
    h.update(config_hash_).update(cluster_digest);
    const std::uint64_t from = config_.mode == SnapshotMode::Cumulative ? 0 : week;
    for (std::uint64_t w = from; w <= week; ++w) h.update(raw_digest_[w]);
    return h.hex_digest();
}

void Runner::cluster() {
    cluster_digest_.assign(weeks_.last + 1, {});
    std::string previous = "none";
    for (std::uint64_t w = 0; w <= weeks_.last; ++w) {
        const fs::path dir = layout_.clusters(w);
        const std::string inputs = digest_of({config_hash_, raw_digest_[w], previous});
        const auto c = check_artifact(dir, inputs, layout_);
        if (c.state == ArtifactState::Valid) {
            stage(Stage::Cluster, dir, [&] { apply_cluster_delta(dir, state_, layout_); });
            cluster_digest_[w] = c.content;
            record(Stage::Cluster, dir, false, c.content);
        } else {
            stage(Stage::Cluster, dir, [&] {
                const fs::path tmp = begin_artifact(dir);
                const auto first_address = state_.address_count();
                const auto first_merge = state_.merge_log().size();
                for_each_record(raw_file(w), config_.mapping, [&](const TxRecord& tx) { state_.apply_transaction(tx); });
                write_cluster_delta(tmp, state_, w, first_address, first_merge);
                cluster_digest_[w] = commit_artifact(dir, inputs);
                record(Stage::Cluster, dir, true, cluster_digest_[w]);
            });
        }
        previous = cluster_digest_[w];

        if (config_.as_of && until_ >= Stage::Graph && w >= weeks_.first) {
            graph_week(w, state_, cluster_digest_[w], [&, w] {
                SnapshotBuilder b;
                const std::uint64_t from = config_.mode == SnapshotMode::Cumulative ? 0 : w;
                for (std::uint64_t v = from; v <= w; ++v) {
                    for_each_record(raw_file(v), config_.mapping,
                                    [&](const TxRecord& tx) { b.add_transaction(tx, state_); });
                    b.compact();
                }
                return b.build(w);
            });
        }
    }
}

void Runner::graph_week(std::uint64_t week, const ClusterState&, const std::string& cluster_digest,
                        const std::function<UserGraph()>& build) {
    const fs::path dir = layout_.graphs(week);
    const std::string inputs = graph_inputs(week, cluster_digest);
    const auto c = check_artifact(dir, inputs, layout_);
    std::string digest = c.content;
    std::optional<UserGraph> built;
    if (c.state == ArtifactState::Valid) {
        record(Stage::Graph, dir, false, digest);
    } else {
        stage(Stage::Graph, dir, [&] {
            const fs::path tmp = begin_artifact(dir);
            UserGraph g = build();
            if (config_.drop_isolated) g = without_isolated(g);
            write_edge_csv(g, tmp / "edges.csv");
            write_degree_csv(g, tmp / "degrees.csv");
            digest = commit_artifact(dir, inputs);
            record(Stage::Graph, dir, true, digest);
            built = std::move(g);
        });
    }
    if (until_ >= Stage::Metrics) queue_metrics(week, std::move(digest), std::move(built));
}

void Runner::queue_metrics(std::uint64_t week, std::string graph_digest, std::optional<UserGraph> built) {
    while (pending_.size() >= max_pending_) {
        auto oldest = std::move(pending_.front());
        pending_.pop_front();
        oldest.get();
    }
    pending_.push_back(std::async(std::launch::async,
                                  [this, week, digest = std::move(graph_digest), g = std::move(built)] {
                                      metrics_week(week, digest, g ? &*g : nullptr);
                                  }));
}

void Runner::drain_metrics() {
    // Wait for everything first so no task outlives a failure, then rethrow
    // the earliest week's error.
    std::exception_ptr first;
    while (!pending_.empty()) {
        try {
            pending_.front().get();
        } catch (...) {
            if (!first) first = std::current_exception();
        }
        pending_.pop_front();
    }
    if (first) std::rethrow_exception(first);
}

void Runner::metrics_week(std::uint64_t week, const std::string& graph_digest, const UserGraph* built) {
    const fs::path dir = layout_.metrics(week);
    const std::string inputs = digest_of({config_hash_, graph_digest});
    const auto c = check_artifact(dir, inputs, layout_);
    if (c.state == ArtifactState::Valid) {
        metrics_digest_[week] = c.content;
        record(Stage::Metrics, dir, false, c.content);
        return;
    }
    stage(Stage::Metrics, dir, [&] {
        const fs::path tmp = begin_artifact(dir);
        std::optional<UserGraph> loaded;
        if (built == nullptr) {
            loaded = read_graph_csv(layout_.graphs(week) / "edges.csv", layout_.graphs(week) / "degrees.csv");
            if (loaded->week() != week && loaded->node_count() > 0) {
                throw Error(ErrorCode::StateMismatch, "graph artifact holds another week");
            }
            loaded = UserGraph::from_users(week, {loaded->ids().begin(), loaded->ids().end()}, [&] {
                std::vector<UserEdge> e;
                loaded->for_each_edge([&](NodeIndex u, NodeIndex v) { e.push_back({loaded->id(u), loaded->id(v)}); });
                return e;
            }());
            built = &*loaded;
        }
        const auto rows = compute_week_metrics(*built, config_);
        write_text(tmp / "components.csv", kComponentsHeader, rows.components);
        write_text(tmp / "component_ratios.csv", kRatiosHeader, rows.ratios);
        write_text(tmp / "metrics.csv", kMetricsHeader, rows.metrics);
        write_text(tmp / "gini_filtered.csv", kGiniFilteredHeader, rows.gini_filtered);
        write_text(tmp / "topc.csv", kTopcHeader, rows.topc);
        metrics_digest_[week] = commit_artifact(dir, inputs);
        record(Stage::Metrics, dir, true, metrics_digest_[week]);
    });
}

void Runner::graphs_final_mode() {
    const std::string& final_digest = cluster_digest_[weeks_.last];
    // Which weeks need a rebuild decides how much raw data has to be re-read.
    std::vector<bool> rebuild(weeks_.last + 1, false);
    for (std::uint64_t w = weeks_.first; w <= weeks_.last; ++w) {
        const auto c = check_artifact(layout_.graphs(w), graph_inputs(w, final_digest), layout_);
        rebuild[w] = c.state != ArtifactState::Valid;
    }
    std::uint64_t last_rebuild = 0;
    bool any = false;
    for (std::uint64_t w = 0; w <= weeks_.last; ++w) {
        if (rebuild[w]) {
            any = true;
            last_rebuild = w;
        }
    }

    SnapshotBuilder cumulative;
    for (std::uint64_t w = 0; w <= weeks_.last; ++w) {
        SnapshotBuilder weekly;
        const bool needs_data = any && (config_.mode == SnapshotMode::Cumulative ? w <= last_rebuild : rebuild[w]);
        if (needs_data) {
            stage(Stage::Graph, layout_.graphs(w), [&] {
                for_each_record(raw_file(w), config_.mapping,
                                [&](const TxRecord& tx) { weekly.add_transaction(tx, state_); });
                weekly.compact();
                if (config_.mode == SnapshotMode::Cumulative) {
                    cumulative.merge(weekly);
                    cumulative.compact();
                }
            });
        }
        if (w < weeks_.first) continue;
        graph_week(w, state_, final_digest, [&, w] {
            return config_.mode == SnapshotMode::Cumulative ? cumulative.build(w) : weekly.build(w);
        });
    }
}

void Runner::summary() {
    const fs::path dir = layout_.summary();
    Sha256 h;
    h.update(config_hash_);
    for (std::uint64_t w = weeks_.first; w <= weeks_.last; ++w) h.update(metrics_digest_[w]).update(raw_digest_[w]);
    const std::string inputs = h.hex_digest();
    const auto c = check_artifact(dir, inputs, layout_);
    if (c.state == ArtifactState::Valid) {
        record(Stage::Summary, dir, false, c.content);
        return;
    }
    stage(Stage::Summary, dir, [&] {
        const fs::path tmp = begin_artifact(dir);
        const std::vector<std::pair<std::string, std::string_view>> files{
            {"components.csv", kComponentsHeader}, {"component_ratios.csv", kRatiosHeader},
            {"metrics.csv", kMetricsHeader},       {"gini_filtered.csv", kGiniFilteredHeader},
            {"topc.csv", kTopcHeader}};
        for (const auto& [file, header] : files) {
            std::string body;
            for (std::uint64_t w = weeks_.first; w <= weeks_.last; ++w) body += read_body(layout_.metrics(w) / file);
            write_text(tmp / file, header, body);
        }
        std::string patterns;
        for (std::uint64_t w = weeks_.first; w <= weeks_.last; ++w) patterns += read_body(layout_.raw(w) / "patterns.csv");
        write_text(tmp / "patterns.csv", kPatternsHeader, patterns);
        record(Stage::Summary, dir, true, commit_artifact(dir, inputs));
    });
}

void Runner::eval() {
    if (config_.source != SourceKind::Synthetic) return;
    const fs::path dir = layout_.eval();
    const std::string inputs = digest_of({config_hash_, cluster_digest_[weeks_.last]});
    const auto c = check_artifact(dir, inputs, layout_);
    if (c.state == ArtifactState::Valid) {
        record(Stage::Eval, dir, false, c.content);
        return;
    }
    stage(Stage::Eval, dir, [&] {
        const fs::path tmp = begin_artifact(dir);
        SyntheticConfig sc = config_.synthetic;
        sc.mapping = config_.mapping;
        SyntheticSource gen(sc);
        while (auto tx = gen.next()) {
            if (tx->week > weeks_.last) break;
        }
        AddressLabels truth;
        AddressLabels predicted;
        for (const auto& [address, entity] : gen.ground_truth()) {
            const auto idx = state_.index_of(address);
            if (!idx) continue;  // generated past the analysed window
            truth.emplace(address, entity);
            predicted.emplace(address, state_.find_user(*idx).value);
        }
        write_score_csv(config_.synthetic.seed, score_partition(predicted, truth), tmp / "score.csv");
        record(Stage::Eval, dir, true, commit_artifact(dir, inputs));
    });
}

RunReport Runner::run() {
    config_.validate();
    fs::create_directories(layout_.root);
    for (const char* sub : {"raw", "clusters", "graphs", "metrics", ""}) remove_leftover_tmp(layout_.root / sub);

    const std::string descriptor = source_descriptor(config_);
    config_hash_ = digest_of({config_.canonical(), descriptor});
    report_.manifest.tool_version = std::string(tool_version());
    report_.manifest.config_hash = config_hash_;
    report_.manifest.source = descriptor;
    report_.manifest.mode = std::string(to_string(config_.mode)) + (config_.as_of ? "+as-of" : "");

    fs::create_directories(layout_.root / "raw");
    ingest();
    report_.manifest.weeks = weeks_;
    if (until_ >= Stage::Cluster) {
        fs::create_directories(layout_.root / "clusters");
        if (until_ >= Stage::Graph) fs::create_directories(layout_.root / "graphs");
        if (until_ >= Stage::Metrics) fs::create_directories(layout_.root / "metrics");
        metrics_digest_.assign(weeks_.last + 1, {});
        try {
            cluster();
            if (!config_.as_of && until_ >= Stage::Graph) graphs_final_mode();
        } catch (...) {
            try {
                drain_metrics();
            } catch (...) {
                // the error that stopped the main thread wins
            }
            throw;
        }
        drain_metrics();
        sort_report(report_);
        if (until_ >= Stage::Summary) summary();
        if (until_ >= Stage::Eval) eval();
    }

    const fs::path manifest = layout_.manifest();
    const fs::path tmp = tmp_path(manifest);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << report_.manifest.to_json().dump(2) << '\n';
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    }
    fs::rename(tmp, manifest);
    return report_;
}

}  // namespace

RunReport run(const PipelineConfig& config, Stage until) { return Runner(config, until).run(); }

ClusterState load_clusters(const StoreLayout& layout, std::uint64_t last_week) {
    ClusterState state;
    for (std::uint64_t w = 0; w <= last_week; ++w) {
        const fs::path dir = layout.clusters(w);
        if (!fs::exists(dir)) throw Error(ErrorCode::StateMismatch, layout.name(dir) + " is missing");
        const auto [content, _] = read_checksum_file(dir, layout);
        if (sha256_tree(dir, kChecksumFile) != content) {
            throw Error(ErrorCode::ChecksumMismatch, layout.name(dir) + ": content does not match its checksum");
        }
        apply_cluster_delta(dir, state, layout);
    }
    return state;
}

void write_partition_csv(const ClusterState& state, const fs::path& path) {
    csv::Writer out(path);
    out.row({"user_id", "address"});
    for (const auto& [user, addresses] : state.snapshot_partition()) {
        for (const auto& a : addresses) out.field(user.value).field(a).end_row();
    }
    out.close();
}

void write_merge_log_csv(const ClusterState& state, const fs::path& path) {
    csv::Writer out(path);
    out.row({"week", "survivor", "absorbed"});
    for (const auto& ev : state.merge_log()) {
        out.field(ev.week).field(std::uint64_t{ev.survivor}).field(std::uint64_t{ev.absorbed}).end_row();
    }
    out.close();
}

}  // namespace bunforge
