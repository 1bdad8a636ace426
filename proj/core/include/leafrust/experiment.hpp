#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "leafrust/imageproc.hpp"
#include "leafrust/ingest.hpp"
#include "leafrust/metrics.hpp"
#include "leafrust/model.hpp"
#include "leafrust/train.hpp"

namespace leafrust {

enum class SweepAxis { Resolutions, Methods };

using DatasetSource = std::variant<std::filesystem::path, SynthConfig>;

struct ExperimentSpec {
  DatasetSource dataset = SynthConfig{};
  SweepAxis axis = SweepAxis::Resolutions;
  std::vector<std::size_t> resolutions{64, 84, 128};
  std::vector<PreprocessMethod> methods{kAllMethods.begin(), kAllMethods.end()};
  // Fixed value of the axis that is not swept.
  PreprocessMethod method = PreprocessMethod::EdgeGray;
  std::size_t resolution = 128;
  Kernel3 kernel = Kernel3::high_pass();
  SplitFractions split;
  std::uint64_t split_seed = 7;
  // input_side and input_channels are overwritten per row.
  ModelConfig model = ModelConfig::compact();
  TrainConfig train;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::size_t jobs = 1;
};

void validate(const ExperimentSpec& spec);

// JSON config file <-> spec. Unknown keys are rejected.
ExperimentSpec spec_from_json(const nlohmann::json& doc);
nlohmann::json spec_to_json(const ExperimentSpec& spec);
ExperimentSpec load_spec(const std::filesystem::path& path);

struct TrainSummary {
  std::size_t stopped_epoch = 0;
  std::size_t best_epoch = 0;
  double best_validation_loss = 0.0;
};

struct ExperimentRow {
  std::size_t sweep_index = 0;
  std::string sweep_label;  // "128" or "edge-gray"
  std::uint64_t seed = 0;
  std::optional<MetricsReport> metrics;  // empty when the row failed
  TrainSummary training;
  double wall_seconds = 0.0;
  std::string failure;
};

struct ExperimentResult {
  SweepAxis axis = SweepAxis::Resolutions;
  std::vector<ExperimentRow> rows;  // sweep-major, then seed order
};

std::size_t sweep_size(const ExperimentSpec& spec) noexcept;
std::string sweep_label(const ExperimentSpec& spec, std::size_t index);
PreprocessConfig preprocess_config_for(const ExperimentSpec& spec, std::size_t index);

// [N, C, H, W] in [0, 1] from same-shaped preprocessed images.
LabeledTensors to_tensors(const std::vector<RawSample>& samples, const PreprocessConfig& config);
std::vector<std::size_t> predict_labels(const ModelParams<float>& params,
                                        const Tensor<float>& images);

struct ExperimentProgress {
  std::function<void(const ExperimentRow&)> on_row;
  std::function<void(const std::string& row_label, const EpochRecord&)> on_epoch;
};

/// Runs every (sweep value, seed) row. Row failures are recorded, not thrown.
ExperimentResult run_experiment(const ExperimentSpec& spec, const ExperimentProgress& progress = {});

}  // namespace leafrust
