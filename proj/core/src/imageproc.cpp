#include "leafrust/imageproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "leafrust/error.hpp"
#include "leafrust/image_io.hpp"

namespace leafrust {

namespace {

std::uint8_t quantize(double v) noexcept {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

void require_channels(const ImageU8& image, std::size_t channels, const char* op) {
  if (image.channels() != channels) {
    throw ValidationError(std::string(op) + ": expected " + std::to_string(channels) +
                          "-channel image, got " + std::to_string(image.channels()));
  }
}


std::vector<double> box_weights_row(std::size_t out_index, double scale, std::size_t in_len,
                                    std::size_t& first) {
  const double lo = out_index * scale;
  const double hi = (out_index + 1) * scale;
  first = static_cast<std::size_t>(std::floor(lo));
  const auto last = std::min(in_len, static_cast<std::size_t>(std::ceil(hi)));
  std::vector<double> w;
  for (std::size_t j = first; j < last; ++j) {
    const double overlap = std::min(hi, double(j + 1)) - std::max(lo, double(j));
    w.push_back(overlap > 0 ? overlap : 0.0);
  }
  return w;
}

// Resample width (axis 0) or height (axis 1) of a W x H x C double image.
std::vector<double> resample(const std::vector<double>& src, std::size_t width,
                             std::size_t height, std::size_t channels, int axis,
                             std::size_t out_len) {
  const std::size_t in_len = axis == 0 ? width : height;
  const std::size_t out_w = axis == 0 ? out_len : width;
  const std::size_t out_h = axis == 0 ? height : out_len;
  std::vector<double> dst(out_w * out_h * channels, 0.0);
  auto src_at = [&](std::size_t along, std::size_t across, std::size_t c) {
    const std::size_t x = axis == 0 ? along : across;
    const std::size_t y = axis == 0 ? across : along;
    return src[(y * width + x) * channels + c];
  };
  auto dst_ref = [&](std::size_t along, std::size_t across, std::size_t c) -> double& {
    const std::size_t x = axis == 0 ? along : across;
    const std::size_t y = axis == 0 ? across : along;
    return dst[(y * out_w + x) * channels + c];
  };
  const std::size_t across_len = axis == 0 ? height : width;
  const double scale = static_cast<double>(in_len) / static_cast<double>(out_len);

  if (out_len < in_len) {
    for (std::size_t i = 0; i < out_len; ++i) {
      std::size_t first = 0;
      const auto weights = box_weights_row(i, scale, in_len, first);
      for (std::size_t a = 0; a < across_len; ++a) {
        for (std::size_t c = 0; c < channels; ++c) {
          double sum = 0.0;
          for (std::size_t k = 0; k < weights.size(); ++k) sum += weights[k] * src_at(first + k, a, c);
          dst_ref(i, a, c) = sum / scale;
        }
      }
    }
  } else {
    for (std::size_t i = 0; i < out_len; ++i) {
      const double pos = std::clamp((i + 0.5) * scale - 0.5, 0.0, double(in_len - 1));
      const auto i0 = static_cast<std::size_t>(std::floor(pos));
      const std::size_t i1 = std::min(i0 + 1, in_len - 1);
      const double t = pos - double(i0);
      for (std::size_t a = 0; a < across_len; ++a) {
        for (std::size_t c = 0; c < channels; ++c) {
          dst_ref(i, a, c) = (1.0 - t) * src_at(i0, a, c) + t * src_at(i1, a, c);
        }
      }
    }
  }
  return dst;
}

}  // namespace

Kernel3 Kernel3::high_pass() {
  // [[1,0,-1],[2,0,-2],[1,0,-1]] rotated 180 degrees, so that true
  // convolution responds like correlation with the unrotated kernel.
  Kernel3 k;
  k.coefficients = {{{-1.0, 0.0, 1.0}, {-2.0, 0.0, 2.0}, {-1.0, 0.0, 1.0}}};
  return k;
}

double Kernel3::sum() const noexcept {
  double s = 0.0;
  for (const auto& row : coefficients)
    for (double v : row) s += v;
  return s;
}

std::string_view method_id(PreprocessMethod method) noexcept {
  switch (method) {
    case PreprocessMethod::EdgeGray: return "edge-gray";
    case PreprocessMethod::GrayOnly: return "gray-only";
    case PreprocessMethod::ColorRaw: return "color-raw";
    case PreprocessMethod::EdgeEqualize: return "edge-equalize";
  }
  return "unknown";
}

std::string_view method_title(PreprocessMethod method) noexcept {
  switch (method) {
    case PreprocessMethod::EdgeGray: return "Edge Detection (Grayscale)";
    case PreprocessMethod::GrayOnly: return "No Edge Detection (Grayscale)";
    case PreprocessMethod::ColorRaw: return "No Edge Detection (Color)";
    case PreprocessMethod::EdgeEqualize: return "Edge Detection Equalization";
  }
  return "unknown";
}

std::optional<PreprocessMethod> parse_method(std::string_view id) noexcept {
  for (auto m : kAllMethods)
    if (method_id(m) == id) return m;
  return std::nullopt;
}

std::size_t method_channels(PreprocessMethod method) noexcept {
  return method == PreprocessMethod::ColorRaw ? 3 : 1;
}

ImageU8 to_grayscale(const ImageU8& rgb) {
  require_channels(rgb, 3, "to_grayscale");
  ImageU8 out(rgb.width(), rgb.height(), 1);
  const auto src = rgb.data();
  auto dst = out.data();
  // Integer form of 0.299 R + 0.587 G + 0.114 B with exact half-up rounding.
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    const unsigned y = 299u * src[3 * i] + 587u * src[3 * i + 1] + 114u * src[3 * i + 2];
    dst[i] = static_cast<std::uint8_t>((y + 500u) / 1000u);
  }
  return out;
}

ResponseMap convolve2d(const ImageU8& gray, const Kernel3& kernel) {
  require_channels(gray, 1, "convolve2d");
  if (gray.width() < 3 || gray.height() < 3) {
    throw ValidationError("convolve2d: image must be at least 3x3, got " +
                          std::to_string(gray.width()) + "x" + std::to_string(gray.height()));
  }
  const auto w = static_cast<std::ptrdiff_t>(gray.width());
  const auto h = static_cast<std::ptrdiff_t>(gray.height());
  ResponseMap out{gray.width(), gray.height(), std::vector<double>(gray.pixel_count(), 0.0)};
  const auto& k = kernel.coefficients;
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t i = 0; i < 3; ++i) {
        const std::ptrdiff_t sy = y - (i - 1);
        if (sy < 0 || sy >= h) continue;
        for (std::ptrdiff_t j = 0; j < 3; ++j) {
          const std::ptrdiff_t sx = x - (j - 1);
          if (sx < 0 || sx >= w) continue;
          acc += k[i][j] * gray.at(sx, sy);
        }
      }
      out.values[y * w + x] = acc;
    }
  }
  return out;
}

ImageU8 min_max_normalize(const ResponseMap& response) {
  ImageU8 out(response.width, response.height, 1);
  if (response.values.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(response.values.begin(), response.values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) return out;
  auto dst = out.data();
  const double range = hi - lo;
  for (std::size_t i = 0; i < response.values.size(); ++i) {
    dst[i] = quantize(255.0 * (response.values[i] - lo) / range);
  }
  return out;
}

ImageU8 histogram_equalize(const ImageU8& gray) {
  require_channels(gray, 1, "histogram_equalize");
  if (gray.pixel_count() == 0) throw ValidationError("histogram_equalize: empty image");
  std::array<std::size_t, 256> cdf{};
  for (auto v : gray.data()) ++cdf[v];
  for (std::size_t i = 1; i < cdf.size(); ++i) cdf[i] += cdf[i - 1];
  const std::size_t total = gray.pixel_count();
  const std::size_t cdf_min = *std::find_if(cdf.begin(), cdf.end(), [](std::size_t c) { return c > 0; });

  ImageU8 out(gray.width(), gray.height(), 1);
  if (total == cdf_min) return out;
  std::array<std::uint8_t, 256> lut{};
  const std::size_t den = total - cdf_min;
  for (std::size_t v = 0; v < 256; ++v) {
    const std::size_t num = cdf[v] >= cdf_min ? cdf[v] - cdf_min : 0;
    lut[v] = static_cast<std::uint8_t>((2 * num * 255 + den) / (2 * den));
  }
  auto dst = out.data();
  const auto src = gray.data();
  for (std::size_t i = 0; i < total; ++i) dst[i] = lut[src[i]];
  return out;
}

ImageU8 resize(const ImageU8& image, std::size_t target) {
  if (target == 0) throw ValidationError("resize: target side must be >= 1");
  if (image.width() == target && image.height() == target) return image;
  if (image.pixel_count() == 0) throw ValidationError("resize: empty image");
  const std::size_t c = image.channels();
  std::vector<double> buf(image.data().begin(), image.data().end());
  std::size_t w = image.width();
  std::size_t h = image.height();
  if (w != target) {
    buf = resample(buf, w, h, c, 0, target);
    w = target;
  }
  if (h != target) {
    buf = resample(buf, w, h, c, 1, target);
    h = target;
  }
  ImageU8 out(target, target, c);
  auto dst = out.data();
  for (std::size_t i = 0; i < buf.size(); ++i) dst[i] = quantize(buf[i]);
  return out;
}

ImageU8 preprocess(const ImageU8& rgb, const PreprocessConfig& config) {
  if (config.resolution < 8) {
    throw ValidationError("preprocess: resolution must be >= 8, got " +
                          std::to_string(config.resolution));
  }
  require_channels(rgb, 3, "preprocess");
  switch (config.method) {
    case PreprocessMethod::EdgeGray:
      return resize(min_max_normalize(convolve2d(to_grayscale(rgb), config.kernel)),
                    config.resolution);
    case PreprocessMethod::GrayOnly:
      return resize(to_grayscale(rgb), config.resolution);
    case PreprocessMethod::ColorRaw:
      return resize(rgb, config.resolution);
    case PreprocessMethod::EdgeEqualize:
      return resize(histogram_equalize(min_max_normalize(convolve2d(to_grayscale(rgb), config.kernel))),
                    config.resolution);
  }
  throw ValidationError("preprocess: unknown method");
}

void dump_response(const std::filesystem::path& path, const ResponseMap& response) {
  io::write_png(path, min_max_normalize(response));
}

}  // namespace leafrust
