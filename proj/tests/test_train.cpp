#include <doctest.h>

#include <cmath>
#include <limits>

#include "leafrust/error.hpp"
#include "leafrust/rng.hpp"
#include "leafrust/train.hpp"

using namespace leafrust;

namespace {

ModelConfig small_model() {
  ModelConfig cfg;
  cfg.input_side = 8;
  cfg.conv1_filters = 2;
  cfg.conv2_filters = 2;
  cfg.dense_widths = {8, 6, 4, 2};
  return cfg;
}

// Class 1 images have a bright 2x2 blob somewhere, class 0 do not.
LabeledTensors toy_data(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  LabeledTensors out{Tensor<float>({n, 1, 8, 8}), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % 2;
    for (std::size_t p = 0; p < 64; ++p) out.images[i * 64 + p] = float(rng.uniform(0.1, 0.4));
    if (label == 1) {
      const std::size_t x = rng.uniform_int(0, 6), y = rng.uniform_int(0, 6);
      for (std::size_t dy = 0; dy < 2; ++dy)
        for (std::size_t dx = 0; dx < 2; ++dx) out.images.at(i, 0, y + dy, x + dx) = 1.0f;
    }
    out.labels.push_back(label);
  }
  return out;
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.learning_rate = 5e-3;
  return cfg;
}

}  // namespace

TEST_CASE("early stopping rule") {
  EarlyStopping s(3, 10, 1e-6);
  CHECK(s.observe(1, 1.0).improved);
  CHECK_FALSE(s.observe(2, 1.0 - 1e-7).improved);  // within min_delta
  CHECK_FALSE(s.observe(3, 2.0).stop);
  const auto d = s.observe(4, 1.5);
  CHECK(d.stop);
  CHECK(s.best_epoch() == 1);
  CHECK(s.best_loss() == 1.0);

  EarlyStopping cap(5, 4, 0.0);
  bool stopped = false;
  for (std::size_t e = 1; e <= 4; ++e) stopped = cap.observe(e, 10.0 - double(e)).stop;
  CHECK(stopped);
}

TEST_CASE("strictly improving validation loss runs to the epoch cap") {
  const auto data = toy_data(10, 1);
  TrainHooks hooks;
  hooks.validation_loss = [](std::size_t epoch, const ModelParams<float>&) { return 10.0 - 0.01 * double(epoch); };
  const auto result = train_model(data, data, small_model(), quick_config(), hooks);
  CHECK(result.report.stopped_epoch == 200);
  CHECK(result.report.best_epoch == 200);
  CHECK(result.report.epochs.size() == 200);
  CHECK_FALSE(result.report.stopped_early);
}

TEST_CASE("constant validation loss stops after the patience window") {
  const auto data = toy_data(10, 2);
  TrainHooks hooks;
  hooks.validation_loss = [](std::size_t, const ModelParams<float>&) { return 0.5; };
  const auto result = train_model(data, data, small_model(), quick_config(), hooks);
  CHECK(result.report.stopped_epoch == 61);
  CHECK(result.report.best_epoch == 1);
  CHECK(result.report.stopped_early);
  CHECK(result.report.best_validation_loss == 0.5);
}

TEST_CASE("best parameters are restored") {
  const auto data = toy_data(12, 3);
  TrainConfig cfg = quick_config();
  cfg.max_epochs = 30;
  cfg.patience = 4;
  ModelParams<float> at_best;
  TrainHooks hooks;
  hooks.validation_loss = [&](std::size_t epoch, const ModelParams<float>& p) {
    if (epoch == 6) at_best = p;
    return std::abs(double(epoch) - 6.0) + 1.0;
  };
  const auto result = train_model(data, data, small_model(), cfg, hooks);
  CHECK(result.report.best_epoch == 6);
  CHECK(result.report.stopped_epoch == 10);
  CHECK(result.report.restored_best);
  CHECK(result.params == at_best);
}

TEST_CASE("report invariants on a real run") {
  const auto train = toy_data(40, 4);
  const auto val = toy_data(16, 5);
  TrainConfig cfg = quick_config();
  cfg.max_epochs = 40;
  cfg.patience = 10;
  const auto result = train_model(train, val, small_model(), cfg);
  const auto& r = result.report;
  CHECK(r.stopped_epoch <= cfg.max_epochs);
  CHECK((r.stopped_epoch - r.best_epoch <= cfg.patience || r.stopped_epoch == cfg.max_epochs));
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& e : r.epochs) lowest = std::min(lowest, e.validation_loss);
  CHECK(r.best_validation_loss == lowest);
  CHECK(r.epochs.back().train_loss < r.epochs.front().train_loss);
  for (const auto& e : result.params.entries()) CHECK(e.tensor->all_finite());
  for (float v : result.params.bn_running_var.values()) CHECK(v >= 0.0f);
}

TEST_CASE("training is deterministic for a seed") {
  const auto train = toy_data(20, 6);
  const auto val = toy_data(8, 7);
  TrainConfig cfg = quick_config();
  cfg.max_epochs = 6;
  cfg.patience = 3;
  const auto a = train_model(train, val, small_model(), cfg);
  const auto b = train_model(train, val, small_model(), cfg);
  CHECK(a.params == b.params);
  REQUIRE(a.report.epochs.size() == b.report.epochs.size());
  for (std::size_t i = 0; i < a.report.epochs.size(); ++i) {
    CHECK(a.report.epochs[i].train_loss == b.report.epochs[i].train_loss);
    CHECK(a.report.epochs[i].validation_loss == b.report.epochs[i].validation_loss);
  }
  cfg.seed = 2;
  CHECK_FALSE(train_model(train, val, small_model(), cfg).params == a.params);
}

TEST_CASE("divergence aborts with a diagnostic naming epoch and batch") {
  const auto data = toy_data(16, 8);
  TrainConfig cfg = quick_config();
  cfg.learning_rate = 1e30;
  CHECK_THROWS_WITH_AS(train_model(data, toy_data(4, 9), small_model(), cfg),
                       doctest::Contains("batch"), TrainingError);
}

TEST_CASE("non-finite inputs are rejected") {
  auto data = toy_data(10, 8);
  data.images[3] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(train_model(data, toy_data(4, 9), small_model(), quick_config()), ValidationError);
}

TEST_CASE("training input validation") {
  const auto data = toy_data(10, 10);
  CHECK_THROWS_AS(train_model(LabeledTensors{}, data, small_model(), quick_config()), ValidationError);
  TrainConfig bad = quick_config();
  bad.patience = 200;
  CHECK_THROWS_AS(train_model(data, data, small_model(), bad), ValidationError);
  ModelConfig wrong = small_model();
  wrong.input_side = 16;
  CHECK_THROWS_AS(train_model(data, data, wrong, quick_config()), ValidationError);
}

TEST_CASE("batch ranges") {
  using R = std::vector<std::pair<std::size_t, std::size_t>>;
  CHECK(batch_ranges(10, 4) == R{{0, 4}, {4, 4}, {8, 2}});
  CHECK(batch_ranges(9, 4) == R{{0, 4}, {4, 5}});
  CHECK(batch_ranges(4, 4) == R{{0, 4}});
  CHECK(batch_ranges(1, 4) == R{{0, 1}});
  CHECK(batch_ranges(420, 32).back() == std::pair<std::size_t, std::size_t>{416, 4});
}
