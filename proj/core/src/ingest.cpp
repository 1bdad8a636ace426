#include "leafrust/ingest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <string>

#include "leafrust/error.hpp"
#include "leafrust/image_io.hpp"
#include "leafrust/rng.hpp"

namespace fs = std::filesystem;

namespace leafrust {

std::string_view label_dir_name(Label label) noexcept {
  return label == Label::Rust ? "rust" : "healthy";
}

namespace {

bool has_image_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

LoadResult load_directory(const fs::path& root) {
  std::vector<std::pair<std::string, Label>> files;
  for (Label label : {Label::Healthy, Label::Rust}) {
    const fs::path dir = root / label_dir_name(label);
    if (!fs::is_directory(dir)) {
      throw ConfigError("dataset root " + root.string() + " is missing class directory '" +
                        std::string(label_dir_name(label)) + "/'");
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && has_image_extension(entry.path())) {
        files.emplace_back(entry.path().string(), label);
      }
    }
  }
  std::sort(files.begin(), files.end());

  LoadResult result;
  for (const auto& [path, label] : files) {
    try {
      ImageU8 image = io::read_rgb(path);
      if (image.width() < 8 || image.height() < 8) {
        result.skipped.push_back({path, "image smaller than 8x8"});
        continue;
      }
      result.samples.push_back({path, label, std::move(image)});
    } catch (const FormatError& e) {
      result.skipped.push_back({path, e.what()});
    }
  }
  if (result.samples.empty()) {
    throw ConfigError("no decodable images under " + root.string() + " (" +
                      std::to_string(result.skipped.size()) + " skipped)");
  }
  return result;
}

DatasetSplit split_dataset(const std::vector<RawSample>& samples, SplitFractions fractions,
                           std::uint64_t seed) {
  const std::array<double, 3> f{fractions.train, fractions.validation, fractions.test};
  for (double v : f) {
    if (!(v > 0.0)) throw ValidationError("split fractions must all be positive");
  }
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) {
    throw ValidationError("split fractions must sum to 1");
  }

  std::array<std::vector<std::size_t>, kClassCount> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i) by_class[class_index(samples[i].label)].push_back(i);
  for (std::size_t c = 0; c < kClassCount; ++c) {
    if (by_class[c].size() < f.size()) {
      throw ValidationError("class '" + std::string(label_dir_name(static_cast<Label>(c))) +
                            "' has " + std::to_string(by_class[c].size()) +
                            " samples; at least 3 are needed for a three-way split");
    }
  }

  // Global part sizes by largest remainder.
  const std::size_t total = samples.size();
  std::array<std::size_t, 3> target{};
  {
    std::array<double, 3> rem{};
    std::size_t assigned = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      target[p] = static_cast<std::size_t>(std::floor(f[p] * total));
      rem[p] = f[p] * total - target[p];
      assigned += target[p];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rem[a] > rem[b]; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++target[order[k % 3]];
  }

  // Per-class floors, then one extra per part where the global deficit is largest.
  std::array<std::array<std::size_t, 3>, kClassCount> counts{};
  std::array<std::size_t, 3> totals{};
  std::array<std::size_t, kClassCount> extras{};
  for (std::size_t c = 0; c < kClassCount; ++c) {
    const double n = static_cast<double>(by_class[c].size());
    std::size_t used = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      counts[c][p] = static_cast<std::size_t>(std::floor(f[p] * n));
      totals[p] += counts[c][p];
      used += counts[c][p];
    }
    extras[c] = by_class[c].size() - used;
  }
  for (std::size_t c = 0; c < kClassCount; ++c) {
    std::array<bool, 3> taken{};
    const double n = static_cast<double>(by_class[c].size());
    for (std::size_t e = 0; e < extras[c]; ++e) {
      std::size_t best = 3;
      for (std::size_t p = 0; p < 3; ++p) {
        if (taken[p]) continue;
        if (best == 3) {
          best = p;
          continue;
        }
        const auto deficit = [&](std::size_t q) {
          return static_cast<long long>(target[q]) - static_cast<long long>(totals[q]);
        };
        const double frac_p = f[p] * n - std::floor(f[p] * n);
        const double frac_b = f[best] * n - std::floor(f[best] * n);
        if (deficit(p) > deficit(best) || (deficit(p) == deficit(best) && frac_p > frac_b)) best = p;
      }
      taken[best] = true;
      ++counts[c][best];
      ++totals[best];
    }
  }

  SplitFractions stored = fractions;
  DatasetSplit split;
  split.seed = seed;
  split.fractions = stored;
  std::array<std::vector<std::size_t>, 3> parts;
  for (std::size_t c = 0; c < kClassCount; ++c) {
    auto indices = by_class[c];
    SplitMix64 rng(derive_seed(seed, c + 1));
    shuffle(std::span<std::size_t>(indices), rng);
    std::size_t offset = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      parts[p].insert(parts[p].end(), indices.begin() + offset,
                      indices.begin() + offset + counts[c][p]);
      offset += counts[c][p];
    }
  }
  std::array<std::vector<RawSample>*, 3> out{&split.train, &split.validation, &split.test};
  for (std::size_t p = 0; p < 3; ++p) {
    std::sort(parts[p].begin(), parts[p].end());
    out[p]->reserve(parts[p].size());
    for (auto i : parts[p]) out[p]->push_back(samples[i]);
  }
  return split;
}

void validate(const SynthConfig& config) {
  if (config.count == 0) throw ValidationError("synth: count must be > 0");
  if (config.resolution < 8) throw ValidationError("synth: resolution must be >= 8");
  if (!(config.lesion_probability >= 0.0 && config.lesion_probability <= 1.0)) {
    throw ValidationError("synth: lesion_probability must be in [0, 1]");
  }
  if (config.lesion_count.lo < 1 || config.lesion_count.hi < config.lesion_count.lo) {
    throw ValidationError("synth: lesion_count_range must satisfy 1 <= lo <= hi");
  }
  if (config.lesion_diameter_px.lo < 1 || config.lesion_diameter_px.hi < config.lesion_diameter_px.lo) {
    throw ValidationError("synth: lesion_diameter_px must satisfy 1 <= lo <= hi");
  }
  if (static_cast<std::size_t>(config.lesion_diameter_px.hi) > config.resolution) {
    throw ValidationError("synth: lesion diameter " + std::to_string(config.lesion_diameter_px.hi) +
                          " exceeds image size " + std::to_string(config.resolution));
  }
  if (config.lesion_intensity < 0 || config.lesion_intensity > 255) {
    throw ValidationError("synth: lesion_intensity must be in [0, 255]");
  }
  if (config.lesion_contrast < 0 || config.lesion_contrast > 255) {
    throw ValidationError("synth: lesion_contrast must be in [0, 255]");
  }
  if (!(config.noise_sigma >= 0.0)) throw ValidationError("synth: noise_sigma must be >= 0");
}

namespace {

std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

SynthImage draw_one(const SynthConfig& config, std::size_t index) {
  SplitMix64 rng(derive_seed(config.seed, index + 1));
  const std::size_t res = config.resolution;
  const double r = static_cast<double>(res);

  const std::array<double, 3> background{rng.uniform(10, 35), rng.uniform(15, 40), rng.uniform(5, 25)};
  const std::array<double, 3> leaf{rng.uniform(45, 80), rng.uniform(100, 145), rng.uniform(30, 60)};
  const double cx = r / 2 + rng.uniform(-0.06, 0.06) * r;
  const double cy = r / 2 + rng.uniform(-0.06, 0.06) * r;
  const double semi_major = rng.uniform(0.34, 0.45) * r;
  const double semi_minor = semi_major * rng.uniform(0.5, 0.75);
  const double angle = rng.uniform(0.0, std::numbers::pi);
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);
  const double shade = rng.uniform(0.08, 0.18);
  const double vein_width = std::max(0.6, 0.012 * r);

  SynthImage out;
  out.leaf_mask.assign(res * res, 0);
  out.lesion_mask.assign(res * res, 0);
  ImageU8 image(res, res, 3);
  for (std::size_t y = 0; y < res; ++y) {
    for (std::size_t x = 0; x < res; ++x) {
      const double dx = double(x) - cx;
      const double dy = double(y) - cy;
      const double u = dx * ca + dy * sa;
      const double v = -dx * sa + dy * ca;
      const double q = (u * u) / (semi_major * semi_major) + (v * v) / (semi_minor * semi_minor);
      const bool inside = q <= 1.0;
      out.leaf_mask[y * res + x] = inside ? 1 : 0;
      for (std::size_t c = 0; c < 3; ++c) {
        double value = background[c];
        if (inside) {
          value = leaf[c] * (1.0 + shade * (u / semi_major));
          if (std::abs(v) < vein_width && std::abs(u) < 0.9 * semi_major) value *= 0.8;
        }
        value += config.noise_sigma * rng.approx_normal();
        image.at(x, y, c) = clamp_u8(value);
      }
    }
  }

  const bool rust = rng.bernoulli(config.lesion_probability);
  if (rust) {
    const auto count = rng.uniform_int(config.lesion_count.lo, config.lesion_count.hi);
    for (std::int64_t l = 0; l < count; ++l) {
      const auto diameter = rng.uniform_int(config.lesion_diameter_px.lo, config.lesion_diameter_px.hi);
      double rx = diameter / 2.0;
      double ry = rx * rng.uniform(0.6, 1.0);
      if (rng.bernoulli(0.5)) std::swap(rx, ry);
      const double half = (diameter % 2 == 0) ? 0.5 : 0.0;
      const auto span = static_cast<std::int64_t>(std::ceil(diameter / 2.0));

      auto speck_pixels = [&](double sx, double sy) {
        std::vector<std::size_t> px;
        const double ccx = std::floor(sx) + half;
        const double ccy = std::floor(sy) + half;
        for (std::int64_t yy = static_cast<std::int64_t>(std::floor(ccy - span));
             yy <= static_cast<std::int64_t>(std::ceil(ccy + span)); ++yy) {
          for (std::int64_t xx = static_cast<std::int64_t>(std::floor(ccx - span));
               xx <= static_cast<std::int64_t>(std::ceil(ccx + span)); ++xx) {
            if (xx < 0 || yy < 0 || xx >= static_cast<std::int64_t>(res) ||
                yy >= static_cast<std::int64_t>(res)) {
              continue;
            }
            const double ex = (double(xx) - ccx) / rx;
            const double ey = (double(yy) - ccy) / ry;
            if (ex * ex + ey * ey <= 1.0 + 1e-9) px.push_back(std::size_t(yy) * res + std::size_t(xx));
          }
        }
        return px;
      };

      std::vector<std::size_t> pixels;
      bool placed = false;
      for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
        const double su = rng.uniform(-0.85, 0.85) * semi_major;
        const double sv = rng.uniform(-0.85, 0.85) * semi_minor;
        const double sx = cx + su * ca - sv * sa;
        const double sy = cy + su * sa + sv * ca;
        pixels = speck_pixels(sx, sy);
        placed = !pixels.empty() && std::all_of(pixels.begin(), pixels.end(),
                                                [&](std::size_t p) { return out.leaf_mask[p] == 1; });
      }
      if (!placed) {
        pixels = speck_pixels(cx, cy);
        std::erase_if(pixels, [&](std::size_t p) { return out.leaf_mask[p] == 0; });
      }
      for (std::size_t p : pixels) {
        out.lesion_mask[p] = 1;
        for (std::size_t c = 0; c < 3; ++c) {
          auto& px = image.data()[p * 3 + c];
          if (config.lesion_contrast > 0) {
            px = clamp_u8(double(px) + config.lesion_contrast);
          } else {
            px = clamp_u8(config.lesion_intensity + double(rng.uniform_int(-4, 4)));
          }
        }
      }
    }
    out.lesion_count = static_cast<std::size_t>(count);
  }

  char name[32];
  std::snprintf(name, sizeof name, "synth_%05zu.png", index);
  const Label label = rust ? Label::Rust : Label::Healthy;
  out.sample = RawSample{std::string(label_dir_name(label)) + "/" + name, label, std::move(image)};
  return out;
}

}  // namespace

std::vector<SynthImage> generate_synthetic_detailed(const SynthConfig& config) {
  validate(config);
  std::vector<SynthImage> out;
  out.reserve(config.count);
  for (std::size_t i = 0; i < config.count; ++i) out.push_back(draw_one(config, i));
  return out;
}

std::vector<RawSample> generate_synthetic(const SynthConfig& config) {
  auto detailed = generate_synthetic_detailed(config);
  std::vector<RawSample> out;
  out.reserve(detailed.size());
  for (auto& d : detailed) out.push_back(std::move(d.sample));
  return out;
}

void write_dataset(const fs::path& root, const std::vector<RawSample>& samples) {
  for (Label label : {Label::Healthy, Label::Rust}) fs::create_directories(root / label_dir_name(label));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    std::string stem = fs::path(s.path).stem().string();
    if (stem.empty()) stem = "sample_" + std::to_string(i);
    io::write_png(root / label_dir_name(s.label) / (stem + ".png"), s.image);
  }
}

}  // namespace leafrust
