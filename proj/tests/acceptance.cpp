// Acceptance gate: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "gradcheck.hpp"
#include "leafrust/checkpoint.hpp"
#include "leafrust/experiment.hpp"
#include "leafrust/imageproc.hpp"
#include "leafrust/report.hpp"
#include "leafrust/train.hpp"
#include "metric_cases.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace leafrust;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome gradient_checks() {
  struct Layer {
    const char* name;
    gradcheck::Result (*check)(std::uint64_t);
    double tolerance;
  };
  const Layer layers[] = {{"conv", gradcheck::conv, 1e-4},
                          {"maxpool", gradcheck::maxpool, 1e-4},
                          {"batchnorm", gradcheck::batchnorm, 1e-4},
                          {"dense", gradcheck::dense, 1e-4},
                          {"softmax_xent", gradcheck::softmax_xent, 1e-4}};
  bool pass = true;
  std::string detail;
  for (const auto& layer : layers) {
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
      const auto r = layer.check(seed);
      worst = std::max(worst, r.max_rel_error);
      checked += r.checked;
    }
    pass = pass && worst < layer.tolerance && checked > 0;
    detail += std::string(detail.empty() ? "" : ", ") + layer.name + " " + fmt("%.1e", worst);
  }
  return {pass, "12 seeds per layer, max rel err " + detail};
}

Outcome convolution_oracle() {
  SplitMix64 rng(77);
  std::size_t equal = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto w = static_cast<std::size_t>(rng.uniform_int(3, 64));
    const auto h = static_cast<std::size_t>(rng.uniform_int(3, 64));
    const auto img = testing::random_image(w, h, 1, rng);
    Kernel3 k;
    for (auto& row : k.coefficients)
      for (auto& c : row) c = rng.uniform(-3.0, 3.0);
    const auto got = convolve2d(img, k);
    const auto want = oracle::convolve(img, k);
    equal += got.values.size() == want.values.size() &&
             std::memcmp(got.values.data(), want.values.data(), got.values.size() * sizeof(double)) == 0;
  }
  return {equal == 100, std::to_string(equal) + "/100 pairs bit-identical"};
}

Outcome preprocessing_examples() {
  const ImageU8 red(1, 1, 3, std::vector<std::uint8_t>{255, 0, 0});
  const bool gray = to_grayscale(red).at(0, 0) == 76;
  const auto norm = min_max_normalize(ResponseMap{3, 1, {-1020.0, -510.0, 0.0}});
  const bool normalize = norm == ImageU8(3, 1, 1, std::vector<std::uint8_t>{0, 128, 255});
  const bool equalize = histogram_equalize(ImageU8(2, 2, 1, std::vector<std::uint8_t>{10, 10, 20, 20})) ==
                        ImageU8(2, 2, 1, std::vector<std::uint8_t>{0, 0, 255, 255});
  const bool box = resize(ImageU8(2, 2, 1, std::vector<std::uint8_t>{0, 100, 100, 200}), 1) ==
                   ImageU8(1, 1, 1, std::vector<std::uint8_t>{100});
  std::string detail = std::string("grayscale ") + (gray ? "ok" : "bad") + ", normalize " +
                       (normalize ? "ok" : "bad") + ", equalize " + (equalize ? "ok" : "bad") + ", box " +
                       (box ? "ok" : "bad");
  return {gray && normalize && equalize && box, detail};
}

// Rows of one sweep value in seed order.
std::vector<const ExperimentRow*> rows_at(const ExperimentResult& result, std::size_t index) {
  std::vector<const ExperimentRow*> out;
  for (const auto& r : result.rows)
    if (r.sweep_index == index) out.push_back(&r);
  return out;
}

// Median macro F1 of one sweep value; NaN if any row failed.
double median_f1(const ExperimentResult& result, std::size_t index) {
  std::vector<double> f1;
  for (const auto* r : rows_at(result, index)) {
    if (!r->metrics) return std::nan("");
    f1.push_back(r->metrics->f1);
  }
  return median(f1);
}

std::string failures(const ExperimentResult& result) {
  std::string out;
  for (const auto& r : result.rows)
    if (!r.metrics) out += " [" + r.sweep_label + "/" + std::to_string(r.seed) + ": " + r.failure + "]";
  return out;
}

void log_row(const ExperimentRow& row) {
  std::cerr << "  row " << row.sweep_label << " seed " << row.seed << ": "
            << (row.metrics ? "f1 " + fmt("%.4f", row.metrics->f1) + " dice " + fmt("%.4f", row.metrics->dice)
                            : "failed: " + row.failure)
            << " (stopped " << row.training.stopped_epoch << ", best " << row.training.best_epoch << ", "
            << fmt("%.1f", row.wall_seconds) << " s)\n";
}

// Resolution sweep [64, 128] with EdgeGray over three seeds, shared by criteria 4 and 5.
const ExperimentResult& resolution_runs() {
  static const ExperimentResult result = [] {
    ExperimentSpec spec;
    spec.axis = SweepAxis::Resolutions;
    spec.resolutions = {128, 64};
    spec.method = PreprocessMethod::EdgeGray;
    spec.seeds = {1, 2, 3};
    ExperimentProgress progress;
    progress.on_row = log_row;
    return run_experiment(spec, progress);
  }();
  return result;
}

Outcome end_to_end() {
  const auto& result = resolution_runs();
  const auto rows = rows_at(result, 0);
  std::vector<double> p, r, f, d;
  double secs = 0.0;
  for (const auto* row : rows) {
    secs += row->wall_seconds;
    if (!row->metrics) return {false, "failed rows:" + failures(result)};
    p.push_back(row->metrics->precision);
    r.push_back(row->metrics->recall);
    f.push_back(row->metrics->f1);
    d.push_back(row->metrics->dice);
  }
  const double mp = median(p), mr = median(r), mf = median(f), md = median(d);
  const bool pass = mp >= 0.90 && mr >= 0.90 && mf >= 0.90 && md >= 0.90 && secs <= 15 * 60;
  return {pass, "EdgeGray 128x128 median P " + fmt("%.4f", mp) + " R " + fmt("%.4f", mr) + " F1 " +
                    fmt("%.4f", mf) + " Dice " + fmt("%.4f", md) + ", " + fmt("%.0f", secs) + " s"};
}

Outcome resolution_trend() {
  const auto& result = resolution_runs();
  const double f128 = median_f1(result, 0), f64 = median_f1(result, 1);
  double secs = 0.0;
  for (const auto& row : result.rows) secs += row.wall_seconds;
  const bool pass = f128 >= f64 && secs <= 30 * 60;
  return {pass, "median F1 128x128 " + fmt("%.4f", f128) + " vs 64x64 " + fmt("%.4f", f64) + ", " +
                    fmt("%.0f", secs) + " s with criterion 4" + failures(result)};
}

Outcome method_trend() {
  ExperimentSpec spec;
  SynthConfig synth;
  synth.lesion_contrast = 25;
  spec.dataset = synth;
  spec.axis = SweepAxis::Methods;
  spec.methods = {PreprocessMethod::EdgeGray, PreprocessMethod::GrayOnly};
  spec.resolution = 128;
  spec.seeds = {1, 2, 3};
  ExperimentProgress progress;
  progress.on_row = log_row;
  const auto result = run_experiment(spec, progress);
  const double edge = median_f1(result, 0), gray = median_f1(result, 1);
  double secs = 0.0;
  for (const auto& row : result.rows) secs += row.wall_seconds;
  const bool pass = edge >= gray && secs <= 30 * 60;
  return {pass, "contrast-25 variant median F1 EdgeGray " + fmt("%.4f", edge) + " vs GrayOnly " +
                    fmt("%.4f", gray) + ", " + fmt("%.0f", secs) + " s" + failures(result)};
}

Outcome early_stopping() {
  ModelConfig model;
  model.input_side = 8;
  model.conv1_filters = 2;
  model.conv2_filters = 2;
  model.dense_widths = {8, 6, 4, 2};
  LabeledTensors data{Tensor<float>({8, 1, 8, 8}), {0, 1, 0, 1, 0, 1, 0, 1}};
  SplitMix64 rng(5);
  for (auto& v : data.images.values()) v = float(rng.uniform());
  TrainConfig train;
  train.batch_size = 4;

  TrainHooks improving;
  improving.validation_loss = [](std::size_t epoch, const ModelParams<float>&) { return 10.0 - 0.01 * double(epoch); };
  const auto a = train_model(data, data, model, train, improving).report;
  TrainHooks constant;
  constant.validation_loss = [](std::size_t, const ModelParams<float>&) { return 0.5; };
  const auto b = train_model(data, data, model, train, constant).report;
  const bool pass = a.stopped_epoch == 200 && b.stopped_epoch == 61 && b.best_epoch == 1;
  return {pass, "improving stopped at " + std::to_string(a.stopped_epoch) + ", constant stopped at " +
                    std::to_string(b.stopped_epoch) + " with best " + std::to_string(b.best_epoch)};
}

Outcome sweep_determinism() {
  const auto dir = testing::scratch_dir("acceptance_sweep");
  ExperimentSpec spec;
  spec.resolutions = {128};
  spec.seeds = {1, 2, 3};
  std::ofstream(dir / "spec.json") << spec_to_json(spec).dump(2);
  auto sweep = [&](const char* name) {
    std::ostringstream out, err;
    return cli::cli_main({"leafrust", "sweep", "--config", (dir / "spec.json").string(), "--out",
                          (dir / name).string(), "--max-epochs", "20"},
                         out, err);
  };
  const int first = sweep("a");
  const int second = sweep("b");
  const auto a = slurp(dir / "a" / "rows.csv"), b = slurp(dir / "b" / "rows.csv");
  const auto rows = std::count(a.begin(), a.end(), '\n') - 1;
  const bool pass = first == 0 && second == 0 && rows == 3 && a == b && a.find("failed") == std::string::npos;
  return {pass, std::to_string(rows) + " rows at epoch cap 20, rows.csv " + (a == b ? "byte-identical" : "differs") +
                    " (" + std::to_string(a.size()) + " bytes)"};
}

Outcome metrics_oracle() {
  std::size_t matched = 0;
  for (const auto& c : metric_cases::kCases) {
    const auto [tn, fp, fn, tp] = c.tn_fp_fn_tp;
    const auto r = compute_metrics(metric_cases::binary(tn, fp, fn, tp), 1);
    auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
    matched += near(r.precision, c.precision) && near(r.recall, c.recall) && near(r.f1, c.f1) && near(r.dice, c.dice);
  }
  SplitMix64 rng(9);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto m = metric_cases::binary(rng.uniform_int(0, 40), rng.uniform_int(0, 40), rng.uniform_int(0, 40),
                                        rng.uniform_int(0, 40) + 1);
    const auto r = compute_metrics(m, 1);
    worst = std::max(worst, std::abs(r.dice - r.per_class[1].f1));
  }
  const std::size_t total = std::size(metric_cases::kCases);
  return {matched == total && total == 20 && worst <= 1e-12,
          std::to_string(matched) + "/" + std::to_string(total) + " matrices match, max |Dice - F1+| " +
              fmt("%.1e", worst)};
}

Outcome checkpoint_roundtrip() {
  const auto dir = testing::scratch_dir("acceptance_ckpt");
  const auto cfg = ModelConfig::compact();
  auto params = init_params(cfg, 8);
  SplitMix64 rng(8);
  for (auto& e : params.entries())
    for (auto& v : e.tensor->values()) v += float(rng.uniform(0.01, 0.2));
  save_params(params, 8, dir / "a.ckpt");
  const auto loaded = load_params(dir / "a.ckpt");
  save_params(loaded.params, loaded.seed, dir / "b.ckpt");
  const bool bytes = slurp(dir / "a.ckpt") == slurp(dir / "b.ckpt");

  Tensor<float> input({4, cfg.input_channels, cfg.input_side, cfg.input_side});
  for (auto& v : input.values()) v = float(rng.uniform());
  const auto before = predict_batch(params, input);
  const auto after = predict_batch(loaded.params, input);
  bool same = before.size() == after.size();
  for (std::size_t i = 0; same && i < before.size(); ++i) {
    same = before[i].label == after[i].label &&
           std::memcmp(before[i].probabilities.data(), after[i].probabilities.data(),
                       before[i].probabilities.size() * sizeof(before[i].probabilities[0])) == 0;
  }
  return {bytes && same, std::string("save/load/save ") + (bytes ? "byte-identical" : "differs") +
                             ", predictions " + (same ? "bitwise equal" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double budget_seconds;  // 0 = checked inside the criterion
  };
  const std::vector<Criterion> criteria{
      {1, "gradient checks", gradient_checks, 60},
      {2, "convolution oracle", convolution_oracle, 10},
      {3, "preprocessing examples", preprocessing_examples, 1},
      {4, "end-to-end accuracy", end_to_end, 0},
      {5, "resolution trend", resolution_trend, 0},
      {6, "method trend", method_trend, 0},
      {7, "early stopping", early_stopping, 60},
      {8, "sweep determinism", sweep_determinism, 0},
      {9, "metrics oracle", metrics_oracle, 1},
      {10, "checkpoint round trip", checkpoint_roundtrip, 5},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (c.budget_seconds > 0 && secs >= c.budget_seconds) {
      o.pass = false;
      o.detail += ", over the " + fmt("%.0f", c.budget_seconds) + " s budget";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail
              << " [" << fmt("%.2f", secs) << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
