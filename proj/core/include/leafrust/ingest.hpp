#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "leafrust/image.hpp"

namespace leafrust {

enum class Label : std::uint8_t { Healthy = 0, Rust = 1 };

inline constexpr std::size_t kClassCount = 2;

std::string_view label_dir_name(Label label) noexcept;
inline std::size_t class_index(Label label) noexcept { return static_cast<std::size_t>(label); }

struct RawSample {
  std::string path;
  Label label = Label::Healthy;
  ImageU8 image;  // RGB, at least 8x8
};

struct LoadWarning {
  std::string path;
  std::string reason;
};

struct LoadResult {
  std::vector<RawSample> samples;
  std::vector<LoadWarning> skipped;
};

/// Loads `root/healthy/*` and `root/rust/*` (png/jpg/jpeg, case-insensitive).
/// Samples are ordered lexicographically by path. Undecodable files are
/// skipped and reported in `skipped`. Throws ConfigError when a class
/// directory is missing or nothing at all could be decoded.
LoadResult load_directory(const std::filesystem::path& root);

struct SplitFractions {
  double train = 0.70;
  double validation = 0.15;
  double test = 0.15;
};

struct DatasetSplit {
  std::vector<RawSample> train;
  std::vector<RawSample> validation;
  std::vector<RawSample> test;
  std::uint64_t seed = 0;
  SplitFractions fractions;
};

/// Stratified, seeded three-way split. Within every class each part receives
/// floor or ceil of its fractional share; leftover samples go to the parts
/// whose global size is furthest below target. Part contents keep input order.
DatasetSplit split_dataset(const std::vector<RawSample>& samples, SplitFractions fractions,
                           std::uint64_t seed);

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct SynthConfig {
  std::size_t count = 600;
  std::size_t resolution = 128;
  double lesion_probability = 0.5;
  IntRange lesion_count{2, 6};
  IntRange lesion_diameter_px{2, 4};
  std::uint64_t seed = 1;
  // Near-white speck intensity; ignored when lesion_contrast > 0.
  int lesion_intensity = 250;
  // When positive, specks are drawn as the underlying leaf pixel brightened
  // by this many intensity units instead of near-white.
  int lesion_contrast = 0;
  double noise_sigma = 8.0;
};

void validate(const SynthConfig& config);

/// Synthetic image plus the masks it was drawn from (for verification).
struct SynthImage {
  RawSample sample;
  std::vector<std::uint8_t> leaf_mask;    // 1 inside the leaf
  std::vector<std::uint8_t> lesion_mask;  // 1 on speck pixels
  std::size_t lesion_count = 0;
};

std::vector<SynthImage> generate_synthetic_detailed(const SynthConfig& config);
std::vector<RawSample> generate_synthetic(const SynthConfig& config);

/// Writes samples as PNGs under `root/healthy` and `root/rust`.
void write_dataset(const std::filesystem::path& root, const std::vector<RawSample>& samples);

}  // namespace leafrust
