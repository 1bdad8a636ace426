#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>

#include "leafrust/checkpoint.hpp"
#include "leafrust/error.hpp"
#include "leafrust/experiment.hpp"
#include "leafrust/image_io.hpp"
#include "leafrust/imageproc.hpp"
#include "leafrust/ingest.hpp"
#include "leafrust/json_io.hpp"
#include "leafrust/metrics.hpp"
#include "leafrust/report.hpp"
#include "leafrust/train.hpp"

namespace fs = std::filesystem;

namespace leafrust::cli {

namespace {

const std::vector<std::string> kMethodIds{"edge-gray", "gray-only", "color-raw", "edge-equalize"};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

ModelConfig arch_config(const std::string& arch) {
  return arch == "compact" ? ModelConfig::compact() : ModelConfig{};
}

struct SynthOptions {
  std::string out;
  SynthConfig config;
};

struct PreprocessOptions {
  std::string data, out, method = "edge-gray";
  std::size_t resolution = 128;
};

struct TrainOptions {
  std::string data, out, method = "edge-gray", arch = "default";
  std::size_t resolution = 128;
  std::uint64_t seed = 1;
  std::uint64_t split_seed = 7;
  TrainConfig train;
  bool verbose = false;
};

struct EvaluateOptions {
  std::string checkpoint, data, method = "edge-gray", out;
  std::size_t resolution = 128;
};

struct SweepOptions {
  std::string config, out;
  std::optional<std::size_t> jobs, max_epochs;
  std::vector<std::uint64_t> seeds;
  bool verbose = false;
};

int run_synth(const SynthOptions& o, std::ostream& out) {
  const auto samples = generate_synthetic(o.config);
  write_dataset(o.out, samples);
  std::size_t rust = 0;
  for (const auto& s : samples) rust += s.label == Label::Rust;
  out << "wrote " << samples.size() << " images (" << rust << " rust, " << samples.size() - rust
      << " healthy) to " << o.out << "\n";
  return 0;
}

int run_preprocess(const PreprocessOptions& o, std::ostream& out, std::ostream& err) {
  PreprocessConfig config;
  config.method = *parse_method(o.method);
  config.resolution = o.resolution;
  const auto loaded = load_directory(o.data);
  for (const auto& w : loaded.skipped) err << "warning: skipped " << w.path << ": " << w.reason << "\n";
  for (Label label : {Label::Healthy, Label::Rust}) fs::create_directories(fs::path(o.out) / label_dir_name(label));
  for (const auto& s : loaded.samples) {
    const auto name = fs::path(s.path).stem().string() + ".png";
    io::write_png(fs::path(o.out) / label_dir_name(s.label) / name, preprocess(s.image, config));
  }
  out << "preprocessed " << loaded.samples.size() << " images (" << loaded.skipped.size()
      << " skipped) with " << o.method << " at " << o.resolution << "x" << o.resolution << "\n";
  return 0;
}

int run_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
  PreprocessConfig pre;
  pre.method = *parse_method(o.method);
  pre.resolution = o.resolution;
  const auto loaded = load_directory(o.data);
  for (const auto& w : loaded.skipped) err << "warning: skipped " << w.path << ": " << w.reason << "\n";
  const auto split = split_dataset(loaded.samples, SplitFractions{}, o.split_seed);

  ModelConfig model = arch_config(o.arch);
  model.input_side = o.resolution;
  model.input_channels = method_channels(pre.method);
  TrainConfig train = o.train;
  train.seed = o.seed;
  TrainHooks hooks;
  if (o.verbose) {
    hooks.on_epoch = [&err](const EpochRecord& r) {
      err << "epoch " << r.epoch << " train_loss " << r.train_loss << " val_loss " << r.validation_loss
          << " val_f1 " << r.validation_macro_f1 << "\n";
    };
  }
  const auto train_data = to_tensors(split.train, pre);
  const auto val_data = to_tensors(split.validation, pre);
  const auto test_data = to_tensors(split.test, pre);
  auto result = train_model(train_data, val_data, model, train, hooks);

  const fs::path ckpt(o.out);
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  save_params(result.params, o.seed, ckpt);
  const auto predicted = predict_labels(result.params, test_data.images);
  const auto metrics = compute_metrics(confusion_matrix(test_data.labels, predicted, model.class_count()),
                                       class_index(Label::Rust));
  nlohmann::json report{{"train_report", to_json(result.report)},
                        {"test_metrics", to_json(metrics)},
                        {"method", o.method},
                        {"resolution", o.resolution},
                        {"seed", o.seed},
                        {"model", to_json(model)},
                        {"train", to_json(train)}};
  fs::path report_path = ckpt;
  report_path.replace_extension(".report.json");
  write_text(report_path, report.dump(2) + "\n");
  out << "stopped at epoch " << result.report.stopped_epoch << " (best " << result.report.best_epoch
      << "); test " << to_csv_row(metrics, o.method) << "\n"
      << "checkpoint " << ckpt.string() << ", report " << report_path.string() << "\n";
  return 0;
}

int run_evaluate(const EvaluateOptions& o, std::ostream& out, std::ostream& err) {
  const auto ck = load_params(o.checkpoint);
  const auto& config = ck.params.config;
  const auto method = *parse_method(o.method);
  if (config.input_side != o.resolution) {
    throw ValidationError("checkpoint input side " + std::to_string(config.input_side) +
                          " does not match requested resolution " + std::to_string(o.resolution));
  }
  if (config.input_channels != method_channels(method)) {
    throw ValidationError("checkpoint expects " + std::to_string(config.input_channels) +
                          "-channel input but method " + o.method + " produces " +
                          std::to_string(method_channels(method)));
  }
  PreprocessConfig pre;
  pre.method = method;
  pre.resolution = o.resolution;
  const auto loaded = load_directory(o.data);
  for (const auto& w : loaded.skipped) err << "warning: skipped " << w.path << ": " << w.reason << "\n";
  const auto data = to_tensors(loaded.samples, pre);
  const auto predicted = predict_labels(ck.params, data.images);
  const auto metrics = compute_metrics(confusion_matrix(data.labels, predicted, config.class_count()),
                                       class_index(Label::Rust));
  const std::string json = to_json(metrics).dump(2) + "\n";
  if (!o.out.empty()) write_text(o.out, json);
  out << json;
  return 0;
}

int run_sweep(const SweepOptions& o, std::ostream& out, std::ostream& err) {
  ExperimentSpec spec = load_spec(o.config);
  if (o.jobs) spec.jobs = *o.jobs;
  if (o.max_epochs) {
    spec.train.max_epochs = *o.max_epochs;
    if (spec.train.patience >= spec.train.max_epochs) spec.train.patience = spec.train.max_epochs - 1;
  }
  if (!o.seeds.empty()) spec.seeds = o.seeds;
  ExperimentProgress progress;
  progress.on_row = [&err](const ExperimentRow& row) {
    err << "row " << row.sweep_label << " seed " << row.seed << ": "
        << (row.metrics ? "f1 " + format_exact(row.metrics->f1) : "failed: " + row.failure) << " ("
        << row.wall_seconds << " s)\n";
  };
  if (o.verbose) {
    progress.on_epoch = [&err](const std::string& label, const EpochRecord& r) {
      err << label << " epoch " << r.epoch << " val_loss " << r.validation_loss << "\n";
    };
  }
  const auto result = run_experiment(spec, progress);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  write_text(dir / "rows.csv", render_rows_csv(result));
  write_text(dir / "timing.csv", render_timing_csv(result));
  write_text(dir / "table.txt", render_table(result, TableFormat::Text));
  write_text(dir / "table.csv", render_table(result, TableFormat::Csv));
  write_text(dir / "spec.resolved.json", spec_to_json(spec).dump(2) + "\n");
  out << render_table(result, TableFormat::Text);
  std::size_t failed = 0;
  for (const auto& row : result.rows) failed += !row.metrics;
  if (failed == result.rows.size()) throw std::runtime_error("every sweep row failed");
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"leafrust: high-pass preprocessing and a small CNN for early leaf-rust detection"};
  app.require_subcommand(1);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic leaf dataset");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--count", synth.config.count, "Number of images");
  synth_cmd->add_option("--resolution", synth.config.resolution, "Side length in pixels");
  synth_cmd->add_option("--lesion-probability", synth.config.lesion_probability);
  synth_cmd->add_option("--lesion-count-min", synth.config.lesion_count.lo);
  synth_cmd->add_option("--lesion-count-max", synth.config.lesion_count.hi);
  synth_cmd->add_option("--lesion-diameter-min", synth.config.lesion_diameter_px.lo);
  synth_cmd->add_option("--lesion-diameter-max", synth.config.lesion_diameter_px.hi);
  synth_cmd->add_option("--lesion-contrast", synth.config.lesion_contrast,
                        "Draw specks this much brighter than the leaf instead of near-white");
  synth_cmd->add_option("--noise-sigma", synth.config.noise_sigma);
  synth_cmd->add_option("--seed", synth.config.seed);

  PreprocessOptions prep;
  auto* prep_cmd = app.add_subcommand("preprocess", "Apply a preprocessing method to a dataset directory");
  prep_cmd->add_option("--data", prep.data, "Dataset root with healthy/ and rust/")->required();
  prep_cmd->add_option("--out", prep.out, "Output directory")->required();
  prep_cmd->add_option("--method", prep.method)->check(CLI::IsMember(kMethodIds));
  prep_cmd->add_option("--resolution", prep.resolution)->check(CLI::Range(8, 4096));

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train one model and write a checkpoint and report");
  train_cmd->add_option("--data", train.data, "Dataset root with healthy/ and rust/")->required();
  train_cmd->add_option("--out", train.out, "Checkpoint path")->required();
  train_cmd->add_option("--method", train.method)->check(CLI::IsMember(kMethodIds));
  train_cmd->add_option("--resolution", train.resolution)->check(CLI::Range(8, 4096));
  train_cmd->add_option("--seed", train.seed);
  train_cmd->add_option("--split-seed", train.split_seed);
  train_cmd->add_option("--arch", train.arch, "default (32/64 filters) or compact")
      ->check(CLI::IsMember({"default", "compact"}));
  train_cmd->add_option("--max-epochs", train.train.max_epochs);
  train_cmd->add_option("--patience", train.train.patience);
  train_cmd->add_option("--batch-size", train.train.batch_size);
  train_cmd->add_option("--learning-rate", train.train.learning_rate);
  train_cmd->add_flag("-v,--verbose", train.verbose, "Print per-epoch losses");

  EvaluateOptions eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset directory");
  eval_cmd->add_option("--checkpoint", eval.checkpoint)->required();
  eval_cmd->add_option("--data", eval.data)->required();
  eval_cmd->add_option("--method", eval.method)->check(CLI::IsMember(kMethodIds));
  eval_cmd->add_option("--resolution", eval.resolution)->check(CLI::Range(8, 4096));
  eval_cmd->add_option("--out", eval.out, "Also write the metrics JSON here");

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a resolution or preprocessing-method sweep");
  sweep_cmd->add_option("--config", sweep.config, "Experiment JSON")->required();
  sweep_cmd->add_option("--out", sweep.out, "Output directory")->required();
  sweep_cmd->add_option("--jobs", sweep.jobs, "Parallel rows (1 = serial reference mode)");
  sweep_cmd->add_option("--max-epochs", sweep.max_epochs, "Override train.max_epochs");
  sweep_cmd->add_option("--seeds", sweep.seeds, "Override the seed list");
  sweep_cmd->add_flag("-v,--verbose", sweep.verbose);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (*synth_cmd) return run_synth(synth, out);
    if (*prep_cmd) return run_preprocess(prep, out, err);
    if (*train_cmd) return run_train(train, out, err);
    if (*eval_cmd) return run_evaluate(eval, out, err);
    if (*sweep_cmd) return run_sweep(sweep, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace leafrust::cli
