#pragma once

#include "bunforge/tx_record.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace bunforge::testing {

// The three-transaction worked example: A funds B with change C, B pays D
// with change E, and C+D pay F with change G.
inline const char* const kWorkedExampleJsonl =
    R"({"txid":"T1","height":0,"week":0,"inputs":[["A",5]],"outputs":[["B",4],["C",1]]})"
    "\n"
    R"({"txid":"T2","height":0,"week":0,"inputs":[["B",3]],"outputs":[["D",2.5],["E",0.5]]})"
    "\n"
    R"({"txid":"T3","height":0,"week":0,"inputs":[["C",1],["D",2.5]],"outputs":[["F",2.4],["G",1.1]]})"
    "\n";

inline std::vector<TxRecord> worked_example_records() {
    std::vector<TxRecord> out;
    std::string text = kWorkedExampleJsonl;
    std::size_t start = 0;
    std::uint64_t line = 0;
    while (start < text.size()) {
        const auto end = text.find('\n', start);
        out.push_back(parse_record(std::string_view(text).substr(start, end - start), ++line));
        start = end + 1;
    }
    return out;
}

inline Satoshi btc(double v) { return static_cast<Satoshi>(v * kSatoshiPerBtc + (v >= 0 ? 0.5 : -0.5)); }

inline TxRecord make_tx(std::string txid, std::vector<std::pair<std::string, double>> ins,
                        std::vector<std::pair<std::string, double>> outs, std::uint64_t height = 0,
                        std::uint64_t week = 0) {
    TxRecord tx;
    tx.txid = std::move(txid);
    tx.height = height;
    tx.week = week;
    for (auto& [a, v] : ins) tx.inputs.push_back({a, btc(v)});
    for (auto& [a, v] : outs) tx.outputs.push_back({a, btc(v)});
    return tx;
}

/// Random valid stream over a small address pool, so clusters collide often.
inline std::vector<TxRecord> random_stream(std::mt19937_64& rng, std::size_t n_tx, std::size_t pool,
                                           std::size_t n_weeks = 1, std::uint64_t blocks_per_week = 1008) {
    std::vector<TxRecord> txs;
    std::uniform_int_distribution<std::size_t> addr(0, pool - 1);
    std::uniform_int_distribution<int> n_in(0, 3), n_out(1, 4);
    std::uniform_int_distribution<Satoshi> value(0, 20);  // small range forces ties
    for (std::size_t i = 0; i < n_tx; ++i) {
        TxRecord tx;
        tx.txid = "r" + std::to_string(i);
        tx.week = n_weeks * i / std::max<std::size_t>(n_tx, 1);
        tx.height = tx.week * blocks_per_week;
        const int ni = n_in(rng), no = n_out(rng);
        for (int k = 0; k < ni; ++k) tx.inputs.push_back({"x" + std::to_string(addr(rng)), value(rng)});
        for (int k = 0; k < no; ++k) tx.outputs.push_back({"x" + std::to_string(addr(rng)), value(rng)});
        txs.push_back(std::move(tx));
    }
    return txs;
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class ScratchDir {
  public:
    explicit ScratchDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("bunforge-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

    std::filesystem::path write(const std::string& name, const std::string& content) const {
        const auto p = path_ / name;
        std::ofstream(p, std::ios::binary) << content;
        return p;
    }

  private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace bunforge::testing
