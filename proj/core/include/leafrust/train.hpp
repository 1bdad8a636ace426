#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "leafrust/model.hpp"
#include "leafrust/tensor.hpp"

namespace leafrust {

struct TrainConfig {
  std::size_t max_epochs = 200;
  std::size_t patience = 60;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // A validation loss counts as an improvement only below best - min_delta.
  double min_delta = 1e-6;
};

void validate(const TrainConfig& config);

/// Images as [N, C, H, W] scaled to [0, 1] plus one class index per image.
struct LabeledTensors {
  Tensor<float> images;
  std::vector<std::size_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double validation_accuracy = 0.0;
  double validation_macro_f1 = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t stopped_epoch = 0;
  std::size_t best_epoch = 0;
  double best_validation_loss = 0.0;
  bool restored_best = false;
  bool stopped_early = false;
};

/// Patience-based stopping on a monitored loss.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, std::size_t max_epochs, double min_delta);

  struct Decision {
    bool improved = false;
    bool stop = false;
  };

  // Epochs are 1-based and must be observed in order.
  Decision observe(std::size_t epoch, double loss);

  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_loss() const noexcept { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t max_epochs_;
  double min_delta_;
  std::size_t best_epoch_ = 0;
  double best_loss_;
};

struct TrainHooks {
  // Replaces the computed validation loss for an epoch (testing).
  std::function<double(std::size_t epoch, const ModelParams<float>&)> validation_loss;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  ModelParams<float> params;  // best-validation-epoch parameters
  TrainReport report;
};

/// Seeded minibatch Adam training with early stopping on validation loss.
/// Throws TrainingError on a non-finite loss, naming epoch and batch.
TrainResult train_model(const LabeledTensors& train, const LabeledTensors& validation,
                        const ModelConfig& model_config, const TrainConfig& train_config,
                        const TrainHooks& hooks = {});

// Batch start offsets for one epoch; a trailing batch of one sample is merged
// into its predecessor so batch normalization always sees N >= 2.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t count,
                                                              std::size_t batch_size);

}  // namespace leafrust
