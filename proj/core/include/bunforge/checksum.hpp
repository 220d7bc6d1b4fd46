#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace bunforge {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Digest over the sorted relative names and contents of every regular file
/// under `dir`, skipping files named in `ignore`.
std::string sha256_tree(const std::filesystem::path& dir, std::string_view ignore = {});

/// Incremental hasher for composing digests.
class Sha256 {
  public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    Sha256& update(std::string_view data);
    std::string hex_digest();

  private:
    void* ctx_;
};

}  // namespace bunforge
