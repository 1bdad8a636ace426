#pragma once

// Reference implementations used only by the tests. They are written
// independently of the library code, favouring the most literal reading of
// each definition over speed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "leafrust/image.hpp"
#include "leafrust/imageproc.hpp"

namespace oracle {

using leafrust::ImageU8;
using leafrust::Kernel3;
using leafrust::ResponseMap;

inline std::uint8_t round_u8(double v) {
  // half away from zero for non-negative values: floor(v + 0.5)
  double r = std::floor(v + 0.5);
  if (r < 0) r = 0;
  if (r > 255) r = 255;
  return static_cast<std::uint8_t>(r);
}

inline ImageU8 grayscale(const ImageU8& rgb) {
  ImageU8 out(rgb.width(), rgb.height(), 1);
  for (std::size_t y = 0; y < rgb.height(); ++y)
    for (std::size_t x = 0; x < rgb.width(); ++x) {
      // Exact rational arithmetic in thousandths.
      const long num = 299L * rgb.at(x, y, 0) + 587L * rgb.at(x, y, 1) + 114L * rgb.at(x, y, 2);
      long q = num / 1000;
      if (num % 1000 >= 500) ++q;
      out.at(x, y) = static_cast<std::uint8_t>(q);
    }
  return out;
}

// Direct sum out(x,y) = sum over offsets (dx,dy) of K[1-dy][1-dx] * I(x+dx, y+dy),
// pixels outside the image read as zero. Offsets run from +1 down to -1 so the
// accumulation order is kernel-row-major, which makes the result bitwise
// comparable with any implementation that sums in that order.
inline ResponseMap convolve(const ImageU8& gray, const Kernel3& k) {
  const long w = static_cast<long>(gray.width());
  const long h = static_cast<long>(gray.height());
  ResponseMap out{gray.width(), gray.height(), std::vector<double>(w * h, 0.0)};
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      double acc = 0.0;
      for (long dy = 1; dy >= -1; --dy)
        for (long dx = 1; dx >= -1; --dx) {
          const long sx = x + dx, sy = y + dy;
          const double pixel = (sx < 0 || sy < 0 || sx >= w || sy >= h) ? 0.0 : gray.at(sx, sy);
          if (pixel == 0.0) continue;
          acc += k.coefficients[1 - dy][1 - dx] * pixel;
        }
      out.values[y * w + x] = acc;
    }
  return out;
}

inline ImageU8 normalize(const ResponseMap& r) {
  ImageU8 out(r.width, r.height, 1);
  double lo = r.values.empty() ? 0 : r.values[0], hi = lo;
  for (double v : r.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) return out;
  for (std::size_t i = 0; i < r.values.size(); ++i)
    out.data()[i] = round_u8((r.values[i] - lo) * 255.0 / (hi - lo));
  return out;
}

inline ImageU8 equalize(const ImageU8& g) {
  std::map<int, long> hist;
  for (auto v : g.data()) ++hist[v];
  const long n = static_cast<long>(g.data().size());
  std::map<int, long> cdf;
  long run = 0;
  for (auto [v, c] : hist) {
    run += c;
    cdf[v] = run;
  }
  const long cdf_min = cdf.begin()->second;
  ImageU8 out(g.width(), g.height(), 1);
  if (n == cdf_min) return out;
  for (std::size_t i = 0; i < g.data().size(); ++i) {
    const double t = double(cdf[g.data()[i]] - cdf_min) / double(n - cdf_min) * 255.0;
    out.data()[i] = round_u8(t);
  }
  return out;
}

// Block mean for integer downscale factors only.
inline ImageU8 downscale_integer(const ImageU8& img, std::size_t target) {
  const std::size_t f = img.width() / target;
  ImageU8 out(target, target, img.channels());
  for (std::size_t y = 0; y < target; ++y)
    for (std::size_t x = 0; x < target; ++x)
      for (std::size_t c = 0; c < img.channels(); ++c) {
        long sum = 0;
        for (std::size_t dy = 0; dy < f; ++dy)
          for (std::size_t dx = 0; dx < f; ++dx) sum += img.at(x * f + dx, y * f + dy, c);
        out.at(x, y, c) = round_u8(double(sum) / double(f * f));
      }
  return out;
}

// Central finite-difference derivative of f with respect to x.
inline double central_difference(const std::function<double()>& f, double& x, double h = 1e-4) {
  const double saved = x;
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  return (up - down) / (2 * h);
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

}  // namespace oracle
