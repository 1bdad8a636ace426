#include "leafrust/image.hpp"

#include <string>

#include "leafrust/error.hpp"

namespace leafrust {

namespace {
void check_channels(std::size_t channels) {
  if (channels != 1 && channels != 3) {
    throw ValidationError("image channels must be 1 or 3, got " + std::to_string(channels));
  }
}
}  // namespace

ImageU8::ImageU8(std::size_t width, std::size_t height, std::size_t channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels), data_(width * height * channels, fill) {
  check_channels(channels);
}

ImageU8::ImageU8(std::size_t width, std::size_t height, std::size_t channels,
                 std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_channels(channels);
  if (data_.size() != width * height * channels) {
    throw ValidationError("image data length " + std::to_string(data_.size()) + " != " +
                          std::to_string(width) + "x" + std::to_string(height) + "x" +
                          std::to_string(channels));
  }
}

}  // namespace leafrust
