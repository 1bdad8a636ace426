#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "leafrust/image.hpp"

namespace leafrust::io {

// Decodes PNG (any bit depth/color type) or baseline 8-bit JPEG into RGB.
// The container is sniffed from the leading bytes, not the file extension.
// Throws FormatError on anything undecodable.
ImageU8 decode_rgb(std::span<const std::uint8_t> bytes);
ImageU8 read_rgb(const std::filesystem::path& path);

// Writes an 8-bit gray or RGB PNG. Throws FormatError on I/O failure.
void write_png(const std::filesystem::path& path, const ImageU8& image);

}  // namespace leafrust::io
