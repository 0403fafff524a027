#pragma once

#include <filesystem>
#include <string>

namespace ehk {

std::string read_file_bytes(const std::filesystem::path& path);

// Write-to-temp-then-rename so concurrent writers of the same path leave
// one intact winner and readers never see a truncated file.
void atomic_write_file(const std::filesystem::path& path, const std::string& bytes);

} // namespace ehk
