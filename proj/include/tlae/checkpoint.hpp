#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "tlae/model.hpp"

namespace tlae {

// Binary layout, little-endian:
//   "TLAECKPT"            8-byte magic
//   u32 version           currently 1
//   u64 + bytes           ModelConfig as JSON
//   u32 tensor count
//   per tensor: u64 + bytes name, u64 rows, u64 cols, rows*cols IEEE-754 doubles
// Loading checks the magic, version, names and shapes against the config.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const ModelParams& params);
ModelParams deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace tlae
