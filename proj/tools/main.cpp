// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0
//
// Single-binary command line for the restoration engine:
//   synth-data  generate paired tone-mapped training data with a manifest
//   train       fit a model on a manifest of image pairs
//   restore     run a trained model over images, padding as needed
//   analyze     static parameter / FLOP breakdown at a resolution
//   bench       latency statistics over repeated forward passes
//
// Exit codes: 0 success; 64 usage or invalid configuration; 2 numeric
// failure during computation; 3 unreadable, corrupt, or mismatched files.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "udc/analyzer.hpp"
#include "udc/data.hpp"
#include "udc/image.hpp"
#include "udc/models.hpp"
#include "udc/rng.hpp"
#include "udc/trainer.hpp"

namespace fs = std::filesystem;
using namespace udc;

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitNumeric = 2;
constexpr int kExitFile = 3;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::NumericFailure:
      return kExitNumeric;
    case ErrorCode::IoError:
    case ErrorCode::FormatError:
    case ErrorCode::SpecMismatch:
      return kExitFile;
    default:
      return kExitUsage;  // bad arguments, shapes, domains, or state
  }
}

// ------------------------------------------------------- shared model flags

struct ModelFlags {
  std::string model = "drm_udcnet";
  std::string attn = "on";
  std::vector<int64_t> widths;  // empty: keep the shipped defaults
  int64_t growth = 0;           // 0: default
  int dense_layers = 0;         // 0: default
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  cmd->add_option("--model", f.model, "architecture: drm_udcnet or ludcnet")
      ->check(CLI::IsMember({"drm_udcnet", "ludcnet"}))
      ->capture_default_str();
  cmd->add_option("--attn", f.attn, "attention branch for drm_udcnet: on or off")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  cmd->add_option("--widths", f.widths, "override the three stage widths (e.g. 16 24 32)")
      ->expected(3);
  cmd->add_option("--growth", f.growth, "override the dense-module growth (0 keeps the default)")
      ->capture_default_str();
  cmd->add_option("--dense-layers", f.dense_layers,
                  "override the dense layers per module (0 keeps the default)")
      ->capture_default_str();
}

ModelSpec spec_from_flags(const ModelFlags& f) {
  ModelSpec spec = f.model == "ludcnet" ? ModelSpec::ludcnet() : ModelSpec::drm_udcnet(f.attn == "on");
  if (!f.widths.empty()) {
    spec.base_channels = f.widths[0];
    spec.stage_widths = {f.widths[0], f.widths[1], f.widths[2]};
  }
  if (f.growth > 0) spec.drm_growth = f.growth;
  if (f.dense_layers > 0) spec.drm_dense_layers = f.dense_layers;
  validate(spec);
  return spec;
}

std::pair<int64_t, int64_t> parse_resolution(const std::string& text) {
  const size_t x = text.find('x');
  check(x != std::string::npos && x > 0 && x + 1 < text.size(), ErrorCode::InvalidArgument,
        "resolution must look like 1920x1080, got '" + text + "'");
  try {
    return {std::stoll(text.substr(0, x)), std::stoll(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "resolution must look like 1920x1080, got '" + text + "'");
  }
}

// ---------------------------------------------------------------- commands

struct SynthArgs {
  std::string out;
  int count = 8;
  uint64_t seed = 0;
  std::string psf = "gaussian_spikes";
  int psf_size = 21;
  double psf_sigma = 3.0;
  double noise = 0.01;
  double saturation = 4.0;
  int64_t height = 256;
  int64_t width = 256;
  int depth = 16;
};

int run_synth(const SynthArgs& a) {
  fs::create_directories(a.out);
  const PsfKind kind = a.psf == "gaussian" ? PsfKind::Gaussian : PsfKind::GaussianSpikes;

  std::vector<std::pair<std::string, std::string>> manifest;
  Rng root(a.seed);
  for (int i = 0; i < a.count; ++i) {
    Rng rng = root.fork(static_cast<uint64_t>(i));
    const LinearImage scene = synth_scene(a.height, a.width, rng);
    const PsfKernel psf = synth_psf(kind, a.psf_size, a.psf_sigma);
    const auto [degraded, target] =
        simulate_udc(scene, psf, static_cast<float>(a.noise), static_cast<float>(a.saturation), rng);

    char name[64];
    std::snprintf(name, sizeof name, "pair_%05d", i);
    const std::string in_path = (fs::path(a.out) / (std::string(name) + "_input.ppm")).string();
    const std::string gt_path = (fs::path(a.out) / (std::string(name) + "_target.ppm")).string();
    save_image(degraded.t, in_path, a.depth);
    save_image(target.t, gt_path, a.depth);
    manifest.emplace_back(in_path, gt_path);
  }
  const std::string manifest_path = (fs::path(a.out) / "manifest.tsv").string();
  write_manifest(manifest_path, manifest);
  std::printf("wrote %d pairs under %s (manifest %s)\n", a.count, a.out.c_str(), manifest_path.c_str());
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string out;
  std::string log;  // empty: derived from --out
  ModelFlags model;
  int64_t steps = 2000;
  double lr = 1e-3;
  double lr_min = 1e-6;
  double plateau_factor = 0.5;
  int plateau_patience = 5;
  int batch = 4;
  uint64_t seed = 0;
  std::string augment = "on";
  int64_t checkpoint_every = 0;
  std::string checkpoint_prefix;
};

int run_train(const TrainArgs& a) {
  const ModelSpec spec = spec_from_flags(a.model);
  RestorationModel<float> model(spec, a.seed);
  std::printf("model %s  parameters %lld\n", model_id(spec).c_str(),
              static_cast<long long>(count_params(model)));

  std::vector<PairedSample> pairs;
  for (const auto& [in_path, gt_path] : read_manifest(a.data))
    pairs.emplace_back(load_image(in_path), load_image(gt_path));
  std::printf("loaded %zu pairs from %s\n", pairs.size(), a.data.c_str());

  TrainConfig cfg;
  cfg.lr_init = a.lr;
  cfg.lr_min = a.lr_min;
  cfg.plateau_factor = a.plateau_factor;
  cfg.plateau_patience = a.plateau_patience;
  cfg.batch_size = a.batch;
  cfg.max_steps = a.steps;
  cfg.seed = a.seed;
  cfg.augment = a.augment == "on";
  cfg.checkpoint_every = a.checkpoint_every;
  cfg.checkpoint_prefix = a.checkpoint_prefix;

  const TrainResult result = train(model, pairs, cfg);
  save_weights(model, a.out);

  const std::string log_path = a.log.empty() ? a.out + ".log" : a.log;
  std::ofstream log(log_path, std::ios::binary);
  check(static_cast<bool>(log), ErrorCode::IoError, "cannot write " + log_path);
  log << result.log.text();
  check(static_cast<bool>(log.flush()), ErrorCode::IoError, "cannot write " + log_path);

  std::printf("trained %lld steps  final validation loss %.6f\n",
              static_cast<long long>(result.log.rows.size()), result.final_val_loss);
  std::printf("weights %s\nlog %s\n", a.out.c_str(), log_path.c_str());
  return 0;
}

struct RestoreArgs {
  std::string weights;
  std::string in;
  std::string out;
  std::string pad = "auto";
  int jobs = 1;
  int depth = 16;
};

int run_restore(const RestoreArgs& a) {
  const ModelWeights stored = read_weights(a.weights);
  const ModelSpec spec = parse_spec_text(stored.spec_text);
  RestorationModel<float> model(spec, 0);
  apply_weights(model, stored);
  std::printf("model %s  parameters %lld\n", model_id(spec).c_str(),
              static_cast<long long>(count_params(model)));

  std::vector<fs::path> inputs;
  if (fs::is_directory(a.in)) {
    for (const auto& entry : fs::directory_iterator(a.in)) {
      if (!entry.is_regular_file()) continue;
      const std::string ext = entry.path().extension().string();
      if (ext == ".ppm" || ext == ".pgm") inputs.push_back(entry.path());
    }
    std::sort(inputs.begin(), inputs.end());
    check(!inputs.empty(), ErrorCode::InvalidArgument,
          "no .ppm/.pgm inputs found in directory " + a.in);
  } else {
    inputs.emplace_back(a.in);
  }
  fs::create_directories(a.out);

  const int64_t multiple = spec.kind == ModelKind::DrmUdcnet ? 8 : 2;
  const int jobs = std::max(1, std::min<int>(a.jobs, static_cast<int>(inputs.size())));

  // Evaluation-mode forwards only read the shared parameters, so one model
  // instance serves every worker.
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::vector<std::string> errors(inputs.size());
  auto worker = [&]() {
    for (size_t i = next.fetch_add(1); i < inputs.size(); i = next.fetch_add(1)) {
      try {
        const Tensor<float> image = load_image(inputs[i].string());
        const int64_t h = image.shape().h, w = image.shape().w;
        Tensor<float> fed = a.pad == "auto" ? pad_to_multiple(image, multiple) : image;
        Value<float> restored = model.forward(nullptr, constant(fed), false);
        Tensor<float> result = crop_to(restored->value, h, w);
        save_image(result, (fs::path(a.out) / inputs[i].filename()).string(), a.depth);
      } catch (const Error& e) {
        errors[i] = e.what();
        failed = true;
      }
    }
  };

  std::vector<std::thread> threads;
  for (int t = 0; t < jobs - 1; ++t) threads.emplace_back(worker);
  worker();
  for (std::thread& t : threads) t.join();

  for (size_t i = 0; i < inputs.size(); ++i) {
    if (!errors[i].empty()) {
      std::fprintf(stderr, "error: %s: %s\n", inputs[i].string().c_str(), errors[i].c_str());
    }
  }
  if (failed) throw Error(ErrorCode::FormatError, "one or more inputs failed to restore");
  std::printf("restored %zu image(s) into %s\n", inputs.size(), a.out.c_str());
  return 0;
}

struct AnalyzeArgs {
  ModelFlags model;
  std::string res = "256x256";
  bool both_conventions = false;
  bool json = false;
};

int run_analyze(const AnalyzeArgs& a) {
  const ModelSpec spec = spec_from_flags(a.model);
  const auto [h, w] = parse_resolution(a.res);

  std::vector<ModelReport> reports{{analyze_cost(spec, h, w, true), std::nullopt, std::nullopt}};
  if (a.both_conventions)
    reports.push_back({analyze_cost(spec, h, w, false), std::nullopt, std::nullopt});

  if (a.json) {
    std::fputs(render_report(reports, ReportFormat::Json).c_str(), stdout);
    return 0;
  }
  for (const ModelReport& r : reports) {
    std::printf("%s at %lldx%lld: %lld parameters, %.3f gflops (%s)\n", r.cost.model_id.c_str(),
                static_cast<long long>(h), static_cast<long long>(w),
                static_cast<long long>(r.cost.total_params),
                static_cast<double>(r.cost.total_flops) / 1e9, r.cost.convention().c_str());
    std::fputs(render_layers(r.cost).c_str(), stdout);
  }
  return 0;
}

struct BenchArgs {
  ModelFlags model;
  std::string res = "256x256";
  int runs = 5;
  int threads = 1;
  int warmup = 1;
  uint64_t seed = 0;
  bool json = false;
};

int run_bench(const BenchArgs& a) {
  const ModelSpec spec = spec_from_flags(a.model);
  const auto [h, w] = parse_resolution(a.res);
  RestorationModel<float> model(spec, a.seed);

  const BenchReport bench = benchmark(model, h, w, a.runs, a.threads, a.warmup);
  ModelReport report{analyze_cost(spec, h, w), bench, std::nullopt};

  if (a.json) {
    std::fputs(render_report({report}, ReportFormat::Json).c_str(), stdout);
    return 0;
  }
  for (size_t i = 0; i < bench.times_ms.size(); ++i)
    std::printf("run %zu: %.3f ms\n", i + 1, bench.times_ms[i]);
  if (bench.failed) std::printf("failed: %s\n", bench.failure.c_str());
  std::fputs(render_report({report}, ReportFormat::Table).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"udcnet: paired-data synthesis, training, restoration, and efficiency analysis\n"
               "for blind under-display-camera image restoration.\n"
               "exit codes: 0 success, 64 usage, 2 numeric failure, 3 file problem",
               "udcnet"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "print help for every subcommand");
  app.set_config("--config", "", "read defaults from a config file (explicit flags win)");
  // Let --config appear after the subcommand name as well as before it.
  app.fallthrough();

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth-data", "generate paired training data");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  synth_cmd->add_option("--count", synth.count, "number of pairs")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "generator seed")->capture_default_str();
  synth_cmd->add_option("--psf", synth.psf, "blur kind: gaussian or gaussian_spikes")
      ->check(CLI::IsMember({"gaussian", "gaussian_spikes"}))
      ->capture_default_str();
  synth_cmd->add_option("--psf-size", synth.psf_size, "odd kernel size")->capture_default_str();
  synth_cmd->add_option("--psf-sigma", synth.psf_sigma, "gaussian core width")->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise, "sensor noise sigma")->capture_default_str();
  synth_cmd->add_option("--saturation", synth.saturation, "linear-light clip level")
      ->capture_default_str();
  synth_cmd->add_option("--height", synth.height, "image height")->capture_default_str();
  synth_cmd->add_option("--width", synth.width, "image width")->capture_default_str();
  synth_cmd->add_option("--depth", synth.depth, "output bit depth: 8 or 16")
      ->check(CLI::IsMember({8, 16}))
      ->capture_default_str();

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "fit a model on a manifest of pairs");
  train_cmd->add_option("--data", train_args.data, "manifest of input/target image pairs")->required();
  train_cmd->add_option("--out", train_args.out, "weight file to write")->required();
  train_cmd->add_option("--log", train_args.log, "training log path (default: <out>.log)");
  add_model_flags(train_cmd, train_args.model);
  train_cmd->add_option("--steps", train_args.steps, "optimization steps")->capture_default_str();
  train_cmd->add_option("--lr", train_args.lr, "initial learning rate")->capture_default_str();
  train_cmd->add_option("--lr-min", train_args.lr_min, "learning-rate floor")->capture_default_str();
  train_cmd->add_option("--plateau-factor", train_args.plateau_factor, "rate multiplier on plateau")
      ->capture_default_str();
  train_cmd->add_option("--plateau-patience", train_args.plateau_patience,
                        "stalled epochs before a rate cut")
      ->capture_default_str();
  train_cmd->add_option("--batch", train_args.batch, "batch size")->capture_default_str();
  train_cmd->add_option("--seed", train_args.seed, "initialization and sampling seed")
      ->capture_default_str();
  train_cmd->add_option("--augment", train_args.augment, "paired flips/rotations: on or off")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  train_cmd->add_option("--checkpoint-every", train_args.checkpoint_every,
                        "write intermediate weights every N steps (0: off)")
      ->capture_default_str();
  train_cmd->add_option("--checkpoint-prefix", train_args.checkpoint_prefix,
                        "path prefix for intermediate weights");

  RestoreArgs restore_args;
  CLI::App* restore_cmd = app.add_subcommand("restore", "run a trained model over images");
  restore_cmd->add_option("--weights", restore_args.weights, "trained weight file")->required();
  restore_cmd->add_option("--in", restore_args.in, "input image or directory")->required();
  restore_cmd->add_option("--out", restore_args.out, "output directory")->required();
  restore_cmd->add_option("--pad", restore_args.pad,
                          "auto: reflect-pad indivisible sizes and crop back; strict: reject them")
      ->check(CLI::IsMember({"auto", "strict"}))
      ->capture_default_str();
  restore_cmd->add_option("--jobs", restore_args.jobs, "parallel workers for directory input")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  restore_cmd->add_option("--depth", restore_args.depth, "output bit depth: 8 or 16")
      ->check(CLI::IsMember({8, 16}))
      ->capture_default_str();

  AnalyzeArgs analyze_args;
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "parameter and FLOP breakdown");
  add_model_flags(analyze_cmd, analyze_args.model);
  analyze_cmd->add_option("--res", analyze_args.res, "analysis resolution HxW")->capture_default_str();
  analyze_cmd->add_flag("--both-conventions", analyze_args.both_conventions,
                        "also report FLOPs counted as plain multiply-accumulates");
  analyze_cmd->add_flag("--json", analyze_args.json, "emit the machine-readable report");

  BenchArgs bench_args;
  CLI::App* bench_cmd = app.add_subcommand("bench", "latency statistics for a model");
  add_model_flags(bench_cmd, bench_args.model);
  bench_cmd->add_option("--res", bench_args.res, "input resolution HxW")->capture_default_str();
  bench_cmd->add_option("--runs", bench_args.runs, "timed runs (at least 5)")->capture_default_str();
  bench_cmd->add_option("--threads", bench_args.threads, "compute threads (kernels are single-threaded)")
      ->capture_default_str();
  bench_cmd->add_option("--warmup", bench_args.warmup, "untimed warmup runs")->capture_default_str();
  bench_cmd->add_option("--seed", bench_args.seed, "weight initialization seed")->capture_default_str();
  bench_cmd->add_flag("--json", bench_args.json, "emit the machine-readable report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (train_cmd->parsed()) return run_train(train_args);
    if (restore_cmd->parsed()) return run_restore(restore_args);
    if (analyze_cmd->parsed()) return run_analyze(analyze_args);
    if (bench_cmd->parsed()) return run_bench(bench_args);
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", error_code_name(e.code()), e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitUsage;
}
