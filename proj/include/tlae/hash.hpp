#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace tlae {

// 64-bit FNV-1a; used for content hashes of configs, checkpoints and data files.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept;
std::string hex64(std::uint64_t v);
std::string file_hash(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace tlae
