#include "bunforge/csv.hpp"

#include "bunforge/error.hpp"

#include <charconv>
#include <cmath>

namespace bunforge::csv {

std::string format_double(double value) {
    if (std::isnan(value)) return "undefined";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string format_optional(const std::optional<double>& value) {
    return value ? format_double(*value) : std::string("undefined");
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (const char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

std::optional<std::size_t> Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::nullopt;
}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    Table table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        if (first) {
            table.header = split_line(line);
            first = false;
        } else {
            table.rows.push_back(split_line(line));
        }
    }
    return table;
}

std::uint64_t parse_u64(std::string_view text) {
    std::uint64_t value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw Error(ErrorCode::MalformedSyntax, "expected unsigned integer, got '" + std::string(text) + "'");
    }
    return value;
}

double parse_double(std::string_view text) {
    if (text == "undefined") return std::nan("");
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw Error(ErrorCode::MalformedSyntax, "expected number, got '" + std::string(text) + "'");
    }
    return value;
}

Writer::Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

Writer::~Writer() {
    if (out_.is_open()) out_.close();
}

Writer& Writer::field(std::string_view text) {
    if (!first_) out_.put(',');
    out_ << escape(text);
    first_ = false;
    return *this;
}

Writer& Writer::field(std::uint64_t value) { return field(std::string_view(std::to_string(value))); }

Writer& Writer::field(double value) { return field(std::string_view(format_double(value))); }

Writer& Writer::row(std::initializer_list<std::string_view> fields) {
    for (const auto f : fields) field(f);
    end_row();
    return *this;
}

void Writer::end_row() {
    out_.put('\n');
    first_ = true;
}

void Writer::close() {
    out_.close();
    if (!out_) throw Error(ErrorCode::Io, "failed writing " + path_.string());
}

}  // namespace bunforge::csv
