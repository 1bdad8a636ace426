#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace leafrust {

/// 8-bit image with interleaved channels (1 = gray, 3 = RGB), row-major.
class ImageU8 {
 public:
  ImageU8() = default;
  ImageU8(std::size_t width, std::size_t height, std::size_t channels, std::uint8_t fill = 0);
  ImageU8(std::size_t width, std::size_t height, std::size_t channels, std::vector<std::uint8_t> data);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept { return width_ * height_; }
  bool empty() const noexcept { return data_.empty(); }

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c = 0) noexcept {
    return data_[(y * width_ + x) * channels_ + c];
  }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c = 0) const noexcept {
    return data_[(y * width_ + x) * channels_ + c];
  }

  std::span<std::uint8_t> data() noexcept { return data_; }
  std::span<const std::uint8_t> data() const noexcept { return data_; }

  friend bool operator==(const ImageU8&, const ImageU8&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t channels_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Signed real-valued single-channel grid (convolution output).
struct ResponseMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;

  double at(std::size_t x, std::size_t y) const noexcept { return values[y * width + x]; }
};

}  // namespace leafrust
