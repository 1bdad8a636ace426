#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string_view>

#include "leafrust/image.hpp"

namespace leafrust {

/// 3x3 real kernel, row-major: coefficients[row][col].
struct Kernel3 {
  std::array<std::array<double, 3>, 3> coefficients{};

  /// Sobel-type vertical-edge kernel, zero-sum. Stored as
  /// [[-1,0,1],[-2,0,2],[-1,0,1]] so that true convolution matches
  /// correlation with [[1,0,-1],[2,0,-2],[1,0,-1]]: a dark-to-bright
  /// left-to-right edge responds strongly negative.
  static Kernel3 high_pass();
  double sum() const noexcept;
};

enum class PreprocessMethod { EdgeGray, GrayOnly, ColorRaw, EdgeEqualize };

inline constexpr std::array<PreprocessMethod, 4> kAllMethods{
    PreprocessMethod::EdgeGray, PreprocessMethod::GrayOnly, PreprocessMethod::ColorRaw,
    PreprocessMethod::EdgeEqualize};

// Short identifier used on the command line and in CSV files ("edge-gray").
std::string_view method_id(PreprocessMethod method) noexcept;
// Long table label ("Edge Detection (Grayscale)").
std::string_view method_title(PreprocessMethod method) noexcept;
std::optional<PreprocessMethod> parse_method(std::string_view id) noexcept;
std::size_t method_channels(PreprocessMethod method) noexcept;

struct PreprocessConfig {
  PreprocessMethod method = PreprocessMethod::EdgeGray;
  std::size_t resolution = 128;
  Kernel3 kernel = Kernel3::high_pass();
};

// BT.601 luminance, rounded half away from zero.
ImageU8 to_grayscale(const ImageU8& rgb);

// True 2-D convolution (kernel rotated 180 degrees), zero padding, same size.
ResponseMap convolve2d(const ImageU8& gray, const Kernel3& kernel);

// Affine rescale of [min, max] onto [0, 255]; a constant map becomes all zeros.
ImageU8 min_max_normalize(const ResponseMap& response);

// 256-bin CDF remapping; single-intensity images map to all zeros.
ImageU8 histogram_equalize(const ImageU8& gray);

// Square resize to target x target: box (area-average) filter when shrinking,
// bilinear when enlarging, per axis. Same size returns a copy.
ImageU8 resize(const ImageU8& image, std::size_t target);

ImageU8 preprocess(const ImageU8& rgb, const PreprocessConfig& config);

// Gray PNG of a response map rescaled with min_max_normalize.
void dump_response(const std::filesystem::path& path, const ResponseMap& response);

}  // namespace leafrust
