#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "leafrust/image.hpp"
#include "leafrust/rng.hpp"

namespace testing {

inline leafrust::ImageU8 random_image(std::size_t w, std::size_t h, std::size_t c,
                                      leafrust::SplitMix64& rng) {
  leafrust::ImageU8 img(w, h, c);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return img;
}

// Fresh scratch directory under $LEAFRUST_TMP (or the system temp dir).
inline std::filesystem::path scratch_dir(const std::string& name) {
  const char* env = std::getenv("LEAFRUST_TMP");
  const std::filesystem::path base = env ? std::filesystem::path(env)
                                         : std::filesystem::temp_directory_path() / "leafrust-tests";
  const auto dir = base / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::uint64_t fnv1a(const void* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace testing
