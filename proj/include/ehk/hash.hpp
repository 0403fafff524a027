#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace ehk {

// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

// SHA-256 of a file's contents; media digests survive renames this way.
std::string sha256_file_hex(const std::filesystem::path& path);

// First 8 bytes of SHA-256 as a big-endian u64. Seeds the deterministic
// generators used by the mock backends.
std::uint64_t sha256_seed(std::string_view bytes);

} // namespace ehk
