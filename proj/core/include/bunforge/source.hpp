#pragma once

#include "bunforge/tx_record.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

namespace bunforge {

enum class SourceKind { File, Synthetic, Rpc };

std::string_view to_string(SourceKind kind) noexcept;

/// Resumable position in a record stream.
///   file:      position = byte offset of the next line, sub = lines consumed
///   synthetic: position = records emitted, sub unused
///   rpc:       position = block height being delivered, sub = tx index inside it
struct SourceCursor {
    SourceKind kind = SourceKind::File;
    std::uint64_t position = 0;
    std::uint64_t sub = 0;

    friend bool operator==(const SourceCursor&, const SourceCursor&) = default;
};

/// Single-reader stream of validated records in non-decreasing height order.
class RecordSource {
  public:
    virtual ~RecordSource() = default;

    virtual std::optional<TxRecord> next() = 0;
    [[nodiscard]] virtual SourceCursor cursor() const = 0;
};

/// JSONL transaction file. Blank lines are skipped.
class JsonlFileSource final : public RecordSource {
  public:
    explicit JsonlFileSource(const std::filesystem::path& path, WeekMapping mapping = {},
                             SourceCursor start = {SourceKind::File, 0, 0});

    std::optional<TxRecord> next() override;
    [[nodiscard]] SourceCursor cursor() const override { return cursor_; }

  private:
    std::ifstream in_;
    WeekMapping mapping_;
    SourceCursor cursor_;
    std::optional<std::uint64_t> last_height_;
};

}  // namespace bunforge
