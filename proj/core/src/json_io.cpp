#include "leafrust/json_io.hpp"

#include <initializer_list>
#include <string>

#include "leafrust/error.hpp"

namespace leafrust {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const char* where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + "." + key + ": " + e.what());
  }
}

}  // namespace

json to_json(const ModelConfig& c) {
  return {{"input_side", c.input_side},       {"input_channels", c.input_channels},
          {"conv1_filters", c.conv1_filters}, {"conv2_filters", c.conv2_filters},
          {"conv_kernel", c.conv_kernel},     {"pool_window", c.pool_window},
          {"pool_stride", c.pool_stride},     {"dense_widths", c.dense_widths}};
}

ModelConfig model_config_from_json(const json& j, ModelConfig c) {
  constexpr const char* where = "model";
  reject_unknown(j, {"input_side", "input_channels", "conv1_filters", "conv2_filters", "conv_kernel",
                     "pool_window", "pool_stride", "dense_widths"},
                 where);
  read(j, "input_side", c.input_side, where);
  read(j, "input_channels", c.input_channels, where);
  read(j, "conv1_filters", c.conv1_filters, where);
  read(j, "conv2_filters", c.conv2_filters, where);
  read(j, "conv_kernel", c.conv_kernel, where);
  read(j, "pool_window", c.pool_window, where);
  read(j, "pool_stride", c.pool_stride, where);
  read(j, "dense_widths", c.dense_widths, where);
  return c;
}

json to_json(const TrainConfig& c) {
  return {{"max_epochs", c.max_epochs}, {"patience", c.patience}, {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size}, {"seed", c.seed},         {"beta1", c.beta1},
          {"beta2", c.beta2},           {"epsilon", c.epsilon},   {"min_delta", c.min_delta}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  constexpr const char* where = "train";
  reject_unknown(j, {"max_epochs", "patience", "learning_rate", "batch_size", "seed", "beta1", "beta2",
                     "epsilon", "min_delta"},
                 where);
  read(j, "max_epochs", c.max_epochs, where);
  read(j, "patience", c.patience, where);
  read(j, "learning_rate", c.learning_rate, where);
  read(j, "batch_size", c.batch_size, where);
  read(j, "seed", c.seed, where);
  read(j, "beta1", c.beta1, where);
  read(j, "beta2", c.beta2, where);
  read(j, "epsilon", c.epsilon, where);
  read(j, "min_delta", c.min_delta, where);
  return c;
}

json to_json(const SynthConfig& c) {
  return {{"count", c.count},
          {"resolution", c.resolution},
          {"lesion_probability", c.lesion_probability},
          {"lesion_count_range", {c.lesion_count.lo, c.lesion_count.hi}},
          {"lesion_diameter_px", {c.lesion_diameter_px.lo, c.lesion_diameter_px.hi}},
          {"seed", c.seed},
          {"lesion_intensity", c.lesion_intensity},
          {"lesion_contrast", c.lesion_contrast},
          {"noise_sigma", c.noise_sigma}};
}

SynthConfig synth_config_from_json(const json& j, SynthConfig c) {
  constexpr const char* where = "synthetic";
  reject_unknown(j, {"count", "resolution", "lesion_probability", "lesion_count_range",
                     "lesion_diameter_px", "seed", "lesion_intensity", "lesion_contrast", "noise_sigma"},
                 where);
  read(j, "count", c.count, where);
  read(j, "resolution", c.resolution, where);
  read(j, "lesion_probability", c.lesion_probability, where);
  std::array<int, 2> range{c.lesion_count.lo, c.lesion_count.hi};
  read(j, "lesion_count_range", range, where);
  c.lesion_count = {range[0], range[1]};
  range = {c.lesion_diameter_px.lo, c.lesion_diameter_px.hi};
  read(j, "lesion_diameter_px", range, where);
  c.lesion_diameter_px = {range[0], range[1]};
  read(j, "seed", c.seed, where);
  read(j, "lesion_intensity", c.lesion_intensity, where);
  read(j, "lesion_contrast", c.lesion_contrast, where);
  read(j, "noise_sigma", c.noise_sigma, where);
  return c;
}

json to_json(const TrainReport& r) {
  json epochs = json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"validation_loss", e.validation_loss},
                      {"validation_accuracy", e.validation_accuracy},
                      {"validation_macro_f1", e.validation_macro_f1}});
  }
  return {{"stopped_epoch", r.stopped_epoch},
          {"best_epoch", r.best_epoch},
          {"best_validation_loss", r.best_validation_loss},
          {"restored_best", r.restored_best},
          {"stopped_early", r.stopped_early},
          {"epochs", std::move(epochs)}};
}

}  // namespace leafrust
