#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bunforge::csv {

/// Shortest round-trip text of a double; `undefined` for NaN.
std::string format_double(double value);
std::string format_optional(const std::optional<double>& value);

/// Quotes a field only when it contains a comma, quote or newline.
std::string escape(std::string_view field);

std::vector<std::string> split_line(std::string_view line);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name, or nullopt.
    [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const;
};

/// Reads a CSV file with a header row. Throws Error(Io) if unreadable.
Table read_table(const std::filesystem::path& path);

std::uint64_t parse_u64(std::string_view text);
/// Accepts `undefined` as NaN.
double parse_double(std::string_view text);

/// Line-oriented writer; throws Error(Io) on failure at close().
class Writer {
  public:
    explicit Writer(const std::filesystem::path& path);
    ~Writer();

    Writer& field(std::string_view text);
    Writer& field(std::uint64_t value);
    Writer& field(double value);
    Writer& row(std::initializer_list<std::string_view> fields);
    void end_row();
    void close();

  private:
    std::ofstream out_;
    std::filesystem::path path_;
    bool first_ = true;
};

}  // namespace bunforge::csv
