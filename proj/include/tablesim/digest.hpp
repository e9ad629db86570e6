#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace tablesim {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path &path);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t splitmix64(std::uint64_t x);

std::string read_file(const std::filesystem::path &path);
/// Writes to a temporary sibling and renames, so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path &path, std::string_view contents);

/// Shortest round-trip decimal form of a double; stable across runs.
std::string format_double(double value);

}  // namespace tablesim
