#include "leafrust/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <thread>

#include "leafrust/error.hpp"
#include "leafrust/json_io.hpp"

namespace leafrust {

using nlohmann::json;

std::size_t sweep_size(const ExperimentSpec& spec) noexcept {
  return spec.axis == SweepAxis::Resolutions ? spec.resolutions.size() : spec.methods.size();
}

std::string sweep_label(const ExperimentSpec& spec, std::size_t index) {
  return spec.axis == SweepAxis::Resolutions ? std::to_string(spec.resolutions.at(index))
                                             : std::string(method_id(spec.methods.at(index)));
}

PreprocessConfig preprocess_config_for(const ExperimentSpec& spec, std::size_t index) {
  PreprocessConfig c;
  c.kernel = spec.kernel;
  if (spec.axis == SweepAxis::Resolutions) {
    c.method = spec.method;
    c.resolution = spec.resolutions.at(index);
  } else {
    c.method = spec.methods.at(index);
    c.resolution = spec.resolution;
  }
  return c;
}

void validate(const ExperimentSpec& spec) {
  if (sweep_size(spec) == 0) throw ValidationError("experiment: sweep values must be nonempty");
  if (spec.seeds.empty()) throw ValidationError("experiment: seed list must be nonempty");
  for (auto r : spec.resolutions)
    if (r < 8) throw ValidationError("experiment: resolution " + std::to_string(r) + " is below 8");
  if (spec.resolution < 8) throw ValidationError("experiment: resolution must be >= 8");
  if (spec.jobs == 0) throw ValidationError("experiment: jobs must be >= 1");
  validate(spec.train);
  if (const auto* synth = std::get_if<SynthConfig>(&spec.dataset)) validate(*synth);
}

ExperimentSpec spec_from_json(const json& doc) {
  ExperimentSpec spec;
  if (!doc.is_object()) throw ConfigError("experiment config: expected a JSON object");
  static const std::vector<std::string> known{"dataset", "sweep", "resolutions", "methods", "method",
                                              "resolution", "kernel", "split", "model", "train",
                                              "seeds", "jobs"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("experiment config: unknown key '" + key + "'");
    }
  }
  try {
    if (doc.contains("dataset")) {
      const auto& d = doc.at("dataset");
      if (d.contains("directory") == d.contains("synthetic") || d.size() != 1) {
        throw ConfigError("experiment config: dataset needs exactly one of 'directory' or 'synthetic'");
      }
      if (d.contains("directory")) {
        spec.dataset = std::filesystem::path(d.at("directory").get<std::string>());
      } else {
        spec.dataset = synth_config_from_json(d.at("synthetic"));
      }
    }
    if (doc.contains("sweep")) {
      const auto axis = doc.at("sweep").get<std::string>();
      if (axis == "resolutions") spec.axis = SweepAxis::Resolutions;
      else if (axis == "methods") spec.axis = SweepAxis::Methods;
      else throw ConfigError("experiment config: sweep must be 'resolutions' or 'methods'");
    }
    if (doc.contains("resolutions")) spec.resolutions = doc.at("resolutions").get<std::vector<std::size_t>>();
    auto method_of = [](const std::string& id) {
      const auto m = parse_method(id);
      if (!m) throw ConfigError("experiment config: unknown method '" + id + "'");
      return *m;
    };
    if (doc.contains("methods")) {
      spec.methods.clear();
      for (const auto& id : doc.at("methods").get<std::vector<std::string>>()) spec.methods.push_back(method_of(id));
    }
    if (doc.contains("method")) spec.method = method_of(doc.at("method").get<std::string>());
    if (doc.contains("resolution")) spec.resolution = doc.at("resolution").get<std::size_t>();
    if (doc.contains("kernel")) {
      spec.kernel.coefficients = doc.at("kernel").get<std::array<std::array<double, 3>, 3>>();
    }
    if (doc.contains("split")) {
      const auto& s = doc.at("split");
      for (const auto& [key, value] : s.items()) {
        if (key != "fractions" && key != "seed") throw ConfigError("split: unknown key '" + key + "'");
      }
      if (s.contains("fractions")) {
        const auto f = s.at("fractions").get<std::array<double, 3>>();
        spec.split = {f[0], f[1], f[2]};
      }
      if (s.contains("seed")) spec.split_seed = s.at("seed").get<std::uint64_t>();
    }
    if (doc.contains("model")) spec.model = model_config_from_json(doc.at("model"), spec.model);
    if (doc.contains("train")) spec.train = train_config_from_json(doc.at("train"), spec.train);
    if (doc.contains("seeds")) spec.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    if (doc.contains("jobs")) spec.jobs = doc.at("jobs").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  return spec;
}

json spec_to_json(const ExperimentSpec& spec) {
  json doc;
  if (const auto* dir = std::get_if<std::filesystem::path>(&spec.dataset)) {
    doc["dataset"] = {{"directory", dir->string()}};
  } else {
    doc["dataset"] = {{"synthetic", to_json(std::get<SynthConfig>(spec.dataset))}};
  }
  doc["sweep"] = spec.axis == SweepAxis::Resolutions ? "resolutions" : "methods";
  doc["resolutions"] = spec.resolutions;
  std::vector<std::string> methods;
  for (auto m : spec.methods) methods.emplace_back(method_id(m));
  doc["methods"] = methods;
  doc["method"] = std::string(method_id(spec.method));
  doc["resolution"] = spec.resolution;
  doc["kernel"] = spec.kernel.coefficients;
  doc["split"] = {{"fractions", {spec.split.train, spec.split.validation, spec.split.test}},
                  {"seed", spec.split_seed}};
  doc["model"] = to_json(spec.model);
  doc["train"] = to_json(spec.train);
  doc["seeds"] = spec.seeds;
  doc["jobs"] = spec.jobs;
  return doc;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open experiment config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("experiment config " + path.string() + ": " + e.what());
  }
  return spec_from_json(doc);
}

LabeledTensors to_tensors(const std::vector<RawSample>& samples, const PreprocessConfig& config) {
  if (samples.empty()) throw ValidationError("to_tensors: no samples");
  const std::size_t side = config.resolution;
  const std::size_t channels = method_channels(config.method);
  const std::size_t plane = side * side;
  LabeledTensors out{Tensor<float>({samples.size(), channels, side, side}), {}};
  out.labels.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const ImageU8 img = preprocess(samples[i].image, config);
    const auto px = img.data();
    float* dst = out.images.raw() + i * channels * plane;
    for (std::size_t p = 0; p < plane; ++p) {
      for (std::size_t c = 0; c < channels; ++c) dst[c * plane + p] = px[p * channels + c] / 255.0f;
    }
    out.labels.push_back(class_index(samples[i].label));
  }
  return out;
}

std::vector<std::size_t> predict_labels(const ModelParams<float>& params, const Tensor<float>& images) {
  std::vector<std::size_t> out;
  for (const auto& p : predict_batch(params, images)) out.push_back(p.label);
  return out;
}

namespace {

struct PreparedValue {
  LabeledTensors train, validation, test;
  std::string failure;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const ExperimentProgress& progress) {
  validate(spec);
  ExperimentResult result;
  result.axis = spec.axis;
  const std::size_t values = sweep_size(spec);
  for (std::size_t v = 0; v < values; ++v) {
    for (auto seed : spec.seeds) {
      ExperimentRow row;
      row.sweep_index = v;
      row.sweep_label = sweep_label(spec, v);
      row.seed = seed;
      result.rows.push_back(std::move(row));
    }
  }

  std::string dataset_failure;
  DatasetSplit split;
  try {
    std::vector<RawSample> samples;
    if (const auto* dir = std::get_if<std::filesystem::path>(&spec.dataset)) {
      samples = load_directory(*dir).samples;
    } else {
      samples = generate_synthetic(std::get<SynthConfig>(spec.dataset));
    }
    split = split_dataset(samples, spec.split, spec.split_seed);
  } catch (const std::exception& e) {
    dataset_failure = std::string("dataset: ") + e.what();
  }

  std::vector<PreparedValue> prepared(values);
  for (std::size_t v = 0; v < values && dataset_failure.empty(); ++v) {
    const auto config = preprocess_config_for(spec, v);
    try {
      prepared[v].train = to_tensors(split.train, config);
      prepared[v].validation = to_tensors(split.validation, config);
      prepared[v].test = to_tensors(split.test, config);
    } catch (const std::exception& e) {
      prepared[v].failure = std::string("preprocess: ") + e.what();
    }
  }

  std::mutex progress_mutex;
  auto run_row = [&](ExperimentRow& row) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (!dataset_failure.empty()) throw std::runtime_error(dataset_failure);
      const auto& data = prepared[row.sweep_index];
      if (!data.failure.empty()) throw std::runtime_error(data.failure);
      const auto pre = preprocess_config_for(spec, row.sweep_index);
      ModelConfig model = spec.model;
      model.input_side = pre.resolution;
      model.input_channels = method_channels(pre.method);
      TrainConfig train = spec.train;
      train.seed = row.seed;
      TrainHooks hooks;
      if (progress.on_epoch) {
        const std::string label = row.sweep_label + "/seed" + std::to_string(row.seed);
        hooks.on_epoch = [&, label](const EpochRecord& r) {
          std::lock_guard lock(progress_mutex);
          progress.on_epoch(label, r);
        };
      }
      auto trained = train_model(data.train, data.validation, model, train, hooks);
      const auto predicted = predict_labels(trained.params, data.test.images);
      row.metrics = compute_metrics(confusion_matrix(data.test.labels, predicted, model.class_count()),
                                    class_index(Label::Rust));
      row.training = {trained.report.stopped_epoch, trained.report.best_epoch,
                      trained.report.best_validation_loss};
    } catch (const std::exception& e) {
      row.metrics.reset();
      row.failure = e.what();
    }
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (progress.on_row) {
      std::lock_guard lock(progress_mutex);
      progress.on_row(row);
    }
  };

  const std::size_t jobs = std::min(spec.jobs, result.rows.size());
  if (jobs <= 1) {
    for (auto& row : result.rows) run_row(row);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (std::size_t j = 0; j < jobs; ++j) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < result.rows.size(); i = next++) run_row(result.rows[i]);
      });
    }
  }
  return result;
}

}  // namespace leafrust
