#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace simstc {

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a half-written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace simstc
