#include "leafrust/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "leafrust/adam.hpp"
#include "leafrust/error.hpp"
#include "leafrust/layers.hpp"
#include "leafrust/metrics.hpp"
#include "leafrust/rng.hpp"

namespace leafrust {

void validate(const TrainConfig& c) {
  if (c.max_epochs == 0) throw ValidationError("train config: max_epochs must be >= 1");
  if (c.patience >= c.max_epochs) throw ValidationError("train config: patience must be < max_epochs");
  if (c.batch_size == 0) throw ValidationError("train config: batch_size must be >= 1");
  if (!(c.learning_rate > 0.0)) throw ValidationError("train config: learning_rate must be positive");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0)) {
    throw ValidationError("train config: Adam betas must be in [0, 1)");
  }
  if (!(c.epsilon > 0.0)) throw ValidationError("train config: epsilon must be positive");
  if (!(c.min_delta >= 0.0)) throw ValidationError("train config: min_delta must be >= 0");
}

EarlyStopping::EarlyStopping(std::size_t patience, std::size_t max_epochs, double min_delta)
    : patience_(patience),
      max_epochs_(max_epochs),
      min_delta_(min_delta),
      best_loss_(std::numeric_limits<double>::infinity()) {}

EarlyStopping::Decision EarlyStopping::observe(std::size_t epoch, double loss) {
  Decision d;
  if (loss < best_loss_ - min_delta_) {
    best_loss_ = loss;
    best_epoch_ = epoch;
    d.improved = true;
  }
  d.stop = epoch - best_epoch_ >= patience_ || epoch >= max_epochs_;
  return d;
}

std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t count,
                                                              std::size_t batch_size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t start = 0; start < count; start += batch_size) {
    out.emplace_back(start, std::min(batch_size, count - start));
  }
  if (out.size() > 1 && out.back().second == 1) {
    out.pop_back();
    ++out.back().second;
  }
  return out;
}

namespace {

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

Evaluation evaluate(const ModelParams<float>& params, const LabeledTensors& data) {
  const std::size_t n = data.size();
  const std::size_t per = data.images.size() / n;
  constexpr std::size_t kChunk = 64;
  double loss_sum = 0.0;
  std::vector<std::size_t> predicted(n);
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t len = std::min(kChunk, n - start);
    Shape shape = data.images.shape();
    shape[0] = len;
    Tensor<float> batch(shape, std::vector<float>(data.images.raw() + start * per,
                                                  data.images.raw() + (start + len) * per));
    const auto logits = forward_infer(params, batch);
    const auto loss = nn::softmax_cross_entropy(
        logits, std::span<const std::size_t>(data.labels).subspan(start, len));
    loss_sum += loss.loss * double(len);
    const std::size_t c = logits.dim(1);
    for (std::size_t i = 0; i < len; ++i) {
      const float* row = logits.raw() + i * c;
      predicted[start + i] = static_cast<std::size_t>(std::max_element(row, row + c) - row);
    }
  }
  const std::size_t classes = params.config.class_count();
  const auto report = compute_metrics(confusion_matrix(data.labels, predicted, classes), classes - 1);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) correct += predicted[i] == data.labels[i];
  return {loss_sum / double(n), double(correct) / double(n), report.f1};
}

void check_data(const LabeledTensors& data, const ModelConfig& config, const char* which) {
  if (data.size() == 0) throw ValidationError(std::string(which) + " set is empty");
  check_input_shape(config, data.images.shape());
  if (data.images.dim(0) != data.size()) {
    throw ValidationError(std::string(which) + " set: image count != label count");
  }
  if (!data.images.all_finite()) {
    throw ValidationError(std::string(which) + " set contains non-finite pixel values");
  }
  for (auto label : data.labels) {
    if (label >= config.class_count()) {
      throw ValidationError(std::string(which) + " set: label " + std::to_string(label) + " out of range");
    }
  }
}

}  // namespace

TrainResult train_model(const LabeledTensors& train, const LabeledTensors& validation,
                        const ModelConfig& model_config, const TrainConfig& cfg,
                        const TrainHooks& hooks) {
  validate(model_config);
  validate(cfg);
  check_data(train, model_config, "training");
  check_data(validation, model_config, "validation");

  ModelParams<float> params = init_params(model_config, cfg.seed);
  ModelParams<float> best = params;
  auto entries = params.entries();
  std::vector<nn::AdamState<float>> states;
  for (const auto& e : entries) states.emplace_back(e.trainable ? e.tensor->size() : 0);
  const nn::AdamConfig adam{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon};

  SplitMix64 shuffle_rng(derive_seed(cfg.seed, 0x5EED));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t per = train.images.size() / train.size();

  EarlyStopping stopping(cfg.patience, cfg.max_epochs, cfg.min_delta);
  TrainReport report;
  ForwardCache<float> cache;
  std::uint64_t step = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle(std::span<std::size_t>(order), shuffle_rng);
    const auto ranges = batch_ranges(order.size(), cfg.batch_size);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < ranges.size(); ++b) {
      const auto [start, len] = ranges[b];
      Shape shape = train.images.shape();
      shape[0] = len;
      Tensor<float> batch(shape);
      std::vector<std::size_t> labels(len);
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t src = order[start + i];
        std::copy(train.images.raw() + src * per, train.images.raw() + (src + 1) * per,
                  batch.raw() + i * per);
        labels[i] = train.labels[src];
      }
      const auto logits = forward_train(params, batch, cache);
      const auto loss = nn::softmax_cross_entropy(logits, labels);
      if (!std::isfinite(loss.loss) || !logits.all_finite()) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(b + 1));
      }
      loss_sum += loss.loss * double(len);
      auto grads = backward(params, cache, loss.gradient);
      auto grad_entries = grads.entries();
      ++step;
      for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!entries[i].trainable) continue;
        nn::adam_step(entries[i].tensor->values(),
                      std::span<const float>(grad_entries[i].tensor->values()), states[i], step, adam);
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / double(train.size());
    if (hooks.validation_loss) {
      record.validation_loss = hooks.validation_loss(epoch, params);
    } else {
      const auto eval = evaluate(params, validation);
      record.validation_loss = eval.loss;
      record.validation_accuracy = eval.accuracy;
      record.validation_macro_f1 = eval.macro_f1;
    }
    if (!std::isfinite(record.validation_loss)) {
      throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    report.epochs.push_back(record);
    if (hooks.on_epoch) hooks.on_epoch(record);

    const auto decision = stopping.observe(epoch, record.validation_loss);
    if (decision.improved) best = params;
    if (decision.stop) {
      report.stopped_early = epoch < cfg.max_epochs;
      break;
    }
  }

  report.stopped_epoch = report.epochs.back().epoch;
  report.best_epoch = stopping.best_epoch();
  report.best_validation_loss = stopping.best_loss();
  report.restored_best = true;
  return {std::move(best), std::move(report)};
}

}  // namespace leafrust
