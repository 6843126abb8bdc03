// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0
//
// Static cost analysis (exact parameter counts and analytic FLOPs per
// resolution, layer by layer) and a small latency benchmark harness, plus
// table / machine-readable report rendering with a round-trip parser.
//
// FLOP accounting convention (also stated in every report):
//   - dense and depthwise convolution kernels are counted in
//     multiply-accumulates; FLOPs = 2 x MACs by default (the `double_macs`
//     flag switches to FLOPs = MACs for comparison against sources using
//     that convention); bias additions are not counted;
//   - activations cost 1 FLOP per element, elementwise arithmetic 1 per
//     output element, clamping 2, inference-mode normalization 2;
//   - bilinear resampling costs 8 FLOPs per output element;
//   - reductions (global and channel pooling) cost 1 FLOP per element read;
//   - concatenation, slicing, padding, and coordinate-channel generation
//     are data movement and cost 0.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "udc/models.hpp"

namespace udc {

// ------------------------------------------------------------ cost reports

struct CostRow {
  std::string path;  // layer name as in the parameter registry; glue steps get synthetic names
  int64_t params = 0;
  int64_t flops = 0;

  bool operator==(const CostRow&) const = default;
};

struct CostReport {
  std::string model_id;
  int64_t height = 0;
  int64_t width = 0;
  bool double_macs = true;  // convention tag: FLOPs = 2 x MACs when true, = MACs when false
  std::vector<CostRow> rows;
  int64_t total_params = 0;  // always the sum of rows
  int64_t total_flops = 0;

  std::string convention() const { return double_macs ? "flops=2*MACs" : "flops=MACs"; }

  bool operator==(const CostReport&) const = default;
};

// Stable display name for a configuration: "drm-udcnet", "drm-udcnet+attention",
// or "ludcnet".
std::string model_id(const ModelSpec& spec);

// Closed-form single-layer costs, exposed for spot checks and reuse.
int64_t conv_flops(int kernel, int64_t cin, int64_t cout, int64_t oh, int64_t ow,
                   bool double_macs = true);
int64_t conv_param_count(int kernel, int64_t cin, int64_t cout, bool bias);

// Exact number of trainable scalars in a live model (weights, biases, and
// normalization affine parameters; running statistics excluded).
template <typename T>
int64_t count_params(const RestorationModel<T>& model);

// Analytic per-layer cost walk over the architecture a spec describes, at
// the given input resolution. The resolution must satisfy the same
// constraints the real forward pass enforces. The parameter column is
// resolution-independent and equals count_params of a model built from the
// same spec.
CostReport analyze_cost(const ModelSpec& spec, int64_t height, int64_t width,
                        bool double_macs = true);

// Total of the analytic walk under the default convention.
int64_t count_flops(const ModelSpec& spec, int64_t height, int64_t width);

// -------------------------------------------------------------- benchmarks

struct BenchReport {
  std::string model_id;
  int64_t height = 0;
  int64_t width = 0;
  int threads = 1;
  std::vector<double> times_ms;  // one entry per timed run, in execution order
  double mean_ms = 0.0;
  double std_ms = 0.0;  // sample standard deviation
  double min_ms = 0.0;
  double max_ms = 0.0;
  bool failed = false;   // resource failure at this resolution (times empty)
  std::string failure;   // human-readable reason when failed

  bool operator==(const BenchReport&) const = default;
};

// Runs `warmup` untimed then `runs` timed evaluation-mode forward passes on
// a fixed seeded input, wrapping a monotonic clock around the forward call
// only. Requires runs >= 5 and threads == 1 (the compute kernels are
// single-threaded; the thread count is recorded for protocol parity).
// Running out of memory at the requested resolution is reported as a failed
// BenchReport, not an exception.
BenchReport benchmark(RestorationModel<float>& model, int64_t height, int64_t width, int runs,
                      int threads = 1, int warmup = 1);

// -------------------------------------------------------------- rendering

// One model's worth of material for a comparison report. `ssim` is an
// externally measured quality score (higher is better), optional.
struct ModelReport {
  CostReport cost;
  std::optional<BenchReport> bench;
  std::optional<double> ssim;

  bool operator==(const ModelReport&) const = default;
};

enum class ReportFormat { Table, Json };

// Table: an aligned comparison, one row per model, sorted by total FLOPs
// ascending, with the accounting convention in the legend. Json: a stable
// machine-readable document (schema "udcnet-report-v1", documented in
// docs/report_schema.md) that parse_report round-trips exactly.
std::string render_report(const std::vector<ModelReport>& reports, ReportFormat format);

// Parses the Json emission back; rejects unknown schemas and malformed text.
std::vector<ModelReport> parse_report(const std::string& json_text);

// Per-layer breakdown of one cost report as an aligned table.
std::string render_layers(const CostReport& report);

}  // namespace udc
