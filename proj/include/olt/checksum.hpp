#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace olt {

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file_hex(const std::filesystem::path& path);
std::vector<unsigned char> sha256_raw(std::span<const unsigned char> bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

// 17 significant digits; parses back to the identical double.
std::string format_double(double value);

}  // namespace olt
