// bunforge command-line front end.

#include "bunforge/error.hpp"
#include "bunforge/market.hpp"
#include "bunforge/pipeline.hpp"
#include "bunforge/plot.hpp"
#include "bunforge/rpc.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

namespace fs = std::filesystem;
using namespace bunforge;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitStage = 3;

// Flags that mirror config-file keys one to one.
constexpr const char* kValueKeys[] = {
    "data-dir",    "weeks",  "mode",     "source",          "input",          "seed",
    "n-tx",        "mix",    "txs-per-block", "change-noise", "rpc-url",       "rpc-auth",
    "rpc-from",    "rpc-to", "rpc-timeout-ms", "genesis-height", "blocks-per-week", "damping",
    "pr-tol",      "pr-max-iter", "hits-k", "top-c",          "filter-degree",
};
constexpr const char* kFlagKeys[] = {"as-of", "drop-isolated"};

const char* help_for(std::string_view key) {
    if (key == "data-dir") return "Artifact store root";
    if (key == "weeks") return "Week range A..B (default: every week in the source)";
    if (key == "mode") return "Snapshot mode: cumulative|weekly";
    if (key == "source") return "synthetic|file|rpc";
    if (key == "input") return "JSONL transaction file for the file source";
    if (key == "mix") return "Synthetic pattern mix, e.g. 1-1:0.25,1-2:0.51,1-3:0.12,other:0.12";
    if (key == "seed") return "Synthetic stream seed (default 7)";
    if (key == "n-tx") return "Synthetic transaction count (default 100000)";
    if (key == "txs-per-block") return "Synthetic transactions per block (default 100)";
    if (key == "change-noise") return "Share of synthetic txs whose change is not the smallest output (default 0.05)";
    if (key == "rpc-url") return "Node JSON-RPC endpoint (default http://127.0.0.1:8332)";
    if (key == "rpc-auth") return "user:password for the node RPC";
    if (key == "rpc-from") return "First block height for the rpc source";
    if (key == "rpc-to") return "Last block height for the rpc source";
    if (key == "rpc-timeout-ms") return "Per-request RPC timeout (default 5000)";
    if (key == "genesis-height") return "Height of the first block of week 0 (default 0)";
    if (key == "blocks-per-week") return "Blocks per week (default 1008)";
    if (key == "damping") return "PageRank damping (default 0.85)";
    if (key == "pr-tol") return "PageRank L1 convergence tolerance (default 1e-10)";
    if (key == "pr-max-iter") return "PageRank iteration cap (default 100)";
    if (key == "hits-k") return "HITS iterations (default 20)";
    if (key == "top-c") return "Rows per ranking in topc.csv (default 10)";
    if (key == "filter-degree") return "Filtered counts and Gini keep nodes with total degree above this (default 2)";
    if (key == "as-of") return "Resolve users against each week's own clustering state";
    if (key == "drop-isolated") return "Drop users without edges from snapshots";
    return "";
}

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::InvalidConfig:
        case ErrorCode::InvalidArgument:
        case ErrorCode::InvalidMix:
        case ErrorCode::InvalidRange:
            return kExitValidation;
        default:
            return kExitStage;
    }
}

void print_report(const RunReport& report) {
    std::cout << "weeks " << report.manifest.weeks.to_string() << ": " << report.executed.size()
              << " artifact(s) built, " << report.skipped.size() << " reused\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bunforge: Bitcoin user network toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tool_version()));

    std::map<std::string, std::string> values;
    std::map<std::string, bool> flags;
    std::string config_path;

    auto add_pipeline_options = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key = value config file (same keys as the flags)");
        for (const char* key : kValueKeys) {
            cmd->add_option(std::string("--") + key, values[key], help_for(key));
        }
        for (const char* key : kFlagKeys) cmd->add_flag(std::string("--") + key, flags[key], help_for(key));
    };

    auto* ingest = app.add_subcommand("ingest", "Split the source into weekly raw artifacts");
    auto* cluster = app.add_subcommand("cluster", "Cluster addresses; exports the partition and merge log");
    auto* graph = app.add_subcommand("graph", "Build weekly user-graph snapshots");
    auto* metrics = app.add_subcommand("metrics", "Compute per-week metrics and the summary CSVs");
    auto* run_cmd = app.add_subcommand("run", "Run every stage, including evaluation for synthetic sources");
    for (auto* cmd : {ingest, cluster, graph, metrics, run_cmd}) add_pipeline_options(cmd);

    auto* market = app.add_subcommand("market", "Daily VOL1, rolling Wilcoxon sweep and yearly stats");
    std::string candles, pair = "BTCUSDT", out_dir, fetch_url;
    std::size_t window = 7;
    double alpha = 0.05;
    std::string fetch_start, fetch_end;
    market->add_option("--candles", candles, "One-minute candle CSV");
    market->add_option("--pair", pair, "Trading pair label / exchange symbol");
    market->add_option("--window", window, "Days on each side of the event day")->check(CLI::PositiveNumber);
    market->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    market->add_option("--out", out_dir, "Output directory (default <data-dir>/market)");
    market->add_option("--data-dir", values["data-dir"], help_for("data-dir"));
    market->add_option("--fetch-url", fetch_url, "Fetch candles from this REST base URL instead of --candles");
    market->add_option("--from-ms", fetch_start, "Fetch start, ms since epoch");
    market->add_option("--to-ms", fetch_end, "Fetch end, ms since epoch");

    auto* plot_cmd = app.add_subcommand("plot", "Render a metrics CSV as SVG");
    std::string plot_csv, plot_kind, plot_out;
    plot_cmd->add_option("--csv", plot_csv, "Input CSV")->required();
    plot_cmd->add_option("--kind", plot_kind,
                         "disconnected|relative-size|ratio|newman|growth|pagerank-gini|hits-gini|volatility|sweep")
        ->required();
    plot_cmd->add_option("--out", plot_out, "Output SVG")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    }

    try {
        auto build_config = [&] {
            PipelineConfig config;
            if (!config_path.empty()) config.load_file(config_path);
            const RpcConfig env = RpcConfig::from_env(RpcConfig{config.rpc_url, config.rpc_auth});
            config.rpc_url = env.url;
            config.rpc_auth = env.auth;
            for (const auto& [key, value] : values) {
                if (!value.empty()) config.set(key, value);
            }
            for (const auto& [key, on] : flags) {
                if (on) config.set(key, "true");
            }
            config.validate();
            return config;
        };

        if (app.got_subcommand(plot_cmd)) {
            plot(plot_csv, parse_figure_kind(plot_kind), plot_out);
            std::cout << "wrote " << plot_out << "\n";
            return 0;
        }

        if (app.got_subcommand(market)) {
            PriceSeries series;
            if (!fetch_url.empty()) {
                if (fetch_start.empty() || fetch_end.empty()) {
                    throw Error(ErrorCode::InvalidArgument, "--fetch-url needs --from-ms and --to-ms");
                }
                series = fetch_candles(fetch_url, pair, std::stoll(fetch_start), std::stoll(fetch_end));
            } else if (!candles.empty()) {
                series = read_candles_csv(candles, pair);
            } else {
                throw Error(ErrorCode::InvalidArgument, "market needs --candles or --fetch-url");
            }
            const fs::path dir = !out_dir.empty() ? fs::path(out_dir)
                                 : fs::path(values["data-dir"].empty() ? "bunforge-data" : values["data-dir"]) / "market";
            fs::create_directories(dir);
            const auto vols = daily_vol1(series);
            write_vol_csv(vols, dir / "vol1.csv");
            const auto stats = yearly_stats(vols);
            write_stats_csv(stats, dir / "stats.csv");
            const auto sweep = rolling_sweep(vols, window, alpha);
            write_sweep_csv(sweep, dir / "sweep.csv");
            std::size_t rejected = 0;
            for (const auto& row : sweep.rows) rejected += row.reject ? 1 : 0;
            std::cout << vols.days.size() << " day(s), " << sweep.rows.size() << " sweep row(s), " << rejected
                      << " rejection(s) at alpha " << alpha << "; wrote " << dir.string() << "\n";
            return 0;
        }

        const PipelineConfig config = build_config();
        Stage until = Stage::Eval;
        if (app.got_subcommand(ingest)) until = Stage::Ingest;
        else if (app.got_subcommand(cluster)) until = Stage::Cluster;
        else if (app.got_subcommand(graph)) until = Stage::Graph;
        else if (app.got_subcommand(metrics)) until = Stage::Summary;

        const auto report = run(config, until);
        print_report(report);

        if (until == Stage::Cluster) {
            const StoreLayout layout{config.data_dir};
            const auto state = load_clusters(layout, report.manifest.weeks.last);
            const fs::path exports = config.data_dir / "exports";
            fs::create_directories(exports);
            write_partition_csv(state, exports / "partition.csv");
            write_merge_log_csv(state, exports / "merge_log.csv");
            std::cout << state.address_count() << " address(es), " << state.user_count() << " user(s); wrote "
                      << exports.string() << "\n";
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "bunforge: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "bunforge: " << e.what() << "\n";
        return kExitStage;
    }
}
