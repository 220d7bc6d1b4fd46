#include "bunforge/source.hpp"

#include "bunforge/error.hpp"

#include <string>

namespace bunforge {

std::string_view to_string(SourceKind kind) noexcept {
    switch (kind) {
        case SourceKind::File: return "file";
        case SourceKind::Synthetic: return "synthetic";
        case SourceKind::Rpc: return "rpc";
    }
    return "file";
}

JsonlFileSource::JsonlFileSource(const std::filesystem::path& path, WeekMapping mapping,
                                 SourceCursor start)
    : in_(path, std::ios::binary), mapping_(mapping), cursor_(start) {
    if (!in_) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    if (start.kind != SourceKind::File) {
        throw Error(ErrorCode::InvalidConfig, "file source needs a file cursor");
    }
    in_.seekg(static_cast<std::streamoff>(start.position));
    if (!in_) {
        throw Error(ErrorCode::Io, "cannot seek " + path.string());
    }
}

std::optional<TxRecord> JsonlFileSource::next() {
    std::string line;
    while (std::getline(in_, line)) {
        cursor_.position += line.size() + 1;
        ++cursor_.sub;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        TxRecord tx = parse_record(line, cursor_.sub, mapping_);
        if (last_height_ && tx.height < *last_height_) {
            throw Error(ErrorCode::InvalidRecord, "line " + std::to_string(cursor_.sub) +
                                                      ", field 'height': records out of height order");
        }
        last_height_ = tx.height;
        return tx;
    }
    return std::nullopt;
}

}  // namespace bunforge
