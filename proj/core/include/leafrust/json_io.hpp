#pragma once

#include <nlohmann/json.hpp>

#include "leafrust/ingest.hpp"
#include "leafrust/metrics.hpp"
#include "leafrust/model.hpp"
#include "leafrust/train.hpp"

// JSON codecs for configuration and report types. Readers start from the
// type's defaults, so absent keys keep their default value; unknown keys
// raise ConfigError.
namespace leafrust {

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

nlohmann::json to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig base = {});

nlohmann::json to_json(const TrainReport& report);

}  // namespace leafrust
