#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "leafrust/model.hpp"

namespace leafrust {

/// Checkpoint container layout (little-endian):
///   magic "LRCKPT\r\n" | u32 version | u64 header length | JSON header |
///   float32 tensor payloads in header order | u64 FNV-1a of everything before.
/// The JSON header echoes the ModelConfig, training seed, and every tensor's
/// name and shape.
struct Checkpoint {
  ModelParams<float> params;
  std::uint64_t seed = 0;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_params(const ModelParams<float>& params, std::uint64_t seed,
                 const std::filesystem::path& path);

// Throws FormatError on a corrupt or truncated file.
Checkpoint load_params(const std::filesystem::path& path);

// Also requires every tensor to match `expected`; throws ValidationError
// naming the first mismatched layer.
Checkpoint load_params(const std::filesystem::path& path, const ModelConfig& expected);

}  // namespace leafrust
