// Copyright 2026 udcnet contributors
// SPDX-License-Identifier: Apache-2.0

#include "udc/analyzer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <new>

#include "json.hpp"
#include "udc/rng.hpp"
#include "udc/tape.hpp"

namespace udc {

// ------------------------------------------------------------- layer costs

int64_t conv_flops(int kernel, int64_t cin, int64_t cout, int64_t oh, int64_t ow, bool double_macs) {
  const int64_t macs = int64_t{kernel} * kernel * cin * cout * oh * ow;
  return (double_macs ? 2 : 1) * macs;
}

int64_t conv_param_count(int kernel, int64_t cin, int64_t cout, bool bias) {
  return int64_t{kernel} * kernel * cin * cout + (bias ? cout : 0);
}

std::string model_id(const ModelSpec& spec) {
  if (spec.kind == ModelKind::Ludcnet) return "ludcnet";
  return spec.with_attention_branch ? "drm-udcnet+attention" : "drm-udcnet";
}

template <typename T>
int64_t count_params(const RestorationModel<T>& model) {
  return model.param_count();
}

template int64_t count_params<float>(const RestorationModel<float>&);
template int64_t count_params<double>(const RestorationModel<double>&);

namespace {

// Accumulates rows for one walk. MAC-based costs go through `macs`; raw
// per-element operation counts go through `flops`.
class CostWalk {
 public:
  explicit CostWalk(bool double_macs) : mult_(double_macs ? 2 : 1) {}

  void row(std::string path, int64_t params, int64_t macs, int64_t flops) {
    rows_.push_back({std::move(path), params, mult_ * macs + flops});
  }

  // Dense convolution followed by one activation over its output.
  void conv_act(std::string path, int kernel, int64_t cin, int64_t cout, int64_t oh, int64_t ow,
                bool bias, bool act) {
    row(std::move(path), conv_param_count(kernel, cin, cout, bias),
        int64_t{kernel} * kernel * cin * cout * oh * ow, act ? cout * oh * ow : 0);
  }

  // One dense residual module: dense 3x3 layers growing the feature stack,
  // a 1x1 fusion back to `c`, and the local residual addition.
  void drm(std::string path, int64_t c, int64_t layers, int64_t growth, bool batchnorm, int64_t h,
           int64_t w) {
    int64_t params = 0, macs = 0, flops = 0;
    for (int64_t t = 0; t < layers; ++t) {
      const int64_t cin = c + t * growth;
      params += 9 * cin * growth + (batchnorm ? 2 * growth : growth);
      macs += 9 * cin * growth * h * w;
      if (batchnorm) flops += 2 * growth * h * w;  // inference-form scale and shift
      flops += growth * h * w;                     // relu
    }
    const int64_t fused_in = c + layers * growth;
    params += fused_in * c + c;  // 1x1 fusion, with bias
    macs += fused_in * c * h * w;
    flops += c * h * w;  // local residual addition
    row(std::move(path), params, macs, flops);
  }

  // Inverted linear residual block: 1x1 expansion (relu6), 3x3 depthwise
  // (relu6), 1x1 linear projection, optional identity skip.
  void irb(std::string path, int64_t cin, int64_t cout, int64_t expand, int64_t stride, int64_t h,
           int64_t w) {
    const int64_t ce = cin * expand;
    const int64_t oh = h / stride, ow = w / stride;
    int64_t params = (cin * ce + ce) + (9 * ce + ce) + (ce * cout + cout);
    int64_t macs = cin * ce * h * w + 9 * ce * oh * ow + ce * cout * oh * ow;
    int64_t flops = ce * h * w + ce * oh * ow;  // the two relu6
    if (stride == 1 && cin == cout) flops += cout * oh * ow;
    row(std::move(path), params, macs, flops);
  }

  // Channel attention (two pooled squeeze-excite paths) followed by spatial
  // attention (channel pooling into a k x k conv), both as multiplicative
  // gates.
  void cbam(std::string path, int64_t c, int64_t reduction, int64_t kernel, int64_t h, int64_t w) {
    const int64_t cr = c / reduction;
    int64_t params = (c * cr + cr) + (cr * c + c) + (kernel * kernel * 2 + 1);
    int64_t macs = 2 * (c * cr + cr * c)            // squeeze-excite, avg and max paths
                   + kernel * kernel * 2 * h * w;   // spatial attention conv, 2 -> 1 maps
    int64_t flops = 2 * c * h * w                   // global avg + max pooling reads
                    + 2 * cr                        // relu in both paths
                    + c + c                         // path sum + sigmoid
                    + c * h * w                     // channel gate
                    + 2 * c * h * w                 // channel-wise avg + max pooling reads
                    + h * w                         // spatial sigmoid
                    + c * h * w;                    // spatial gate
    row(std::move(path), params, macs, flops);
  }

  void resize(std::string path, int64_t c, int64_t oh, int64_t ow) {
    row(std::move(path), 0, 0, 8 * c * oh * ow);
  }

  std::vector<CostRow> take() { return std::move(rows_); }

 private:
  int64_t mult_;
  std::vector<CostRow> rows_;
};

void walk_full(const ModelSpec& spec, int64_t h, int64_t w, CostWalk& walk) {
  const auto& sw = spec.stage_widths;
  const int64_t L = spec.drm_dense_layers, g = spec.drm_growth;

  walk.row("input.coords", 0, 0, 0);  // coordinate channels: data movement
  walk.conv_act("stem", 3, 5, sw[0], h, w, true, true);

  for (int stage = 0; stage < 3; ++stage) {
    const int64_t hs = h >> stage, ws = w >> stage;
    for (int i = 0; i < spec.drm_per_block; ++i)
      walk.drm("e" + std::to_string(stage + 1) + ".drm" + std::to_string(i), sw[static_cast<size_t>(stage)],
               L, g, true, hs, ws);
    const int64_t co = sw[static_cast<size_t>(std::min(stage + 1, 2))];
    walk.conv_act("e" + std::to_string(stage + 1) + ".down", 3, sw[static_cast<size_t>(stage)], co,
                  hs / 2, ws / 2, true, true);
  }

  const int64_t dec_in[3] = {sw[2], sw[2], sw[1]};
  const int64_t skip_w[3] = {sw[2], sw[1], sw[0]};
  for (int stage = 0; stage < 3; ++stage) {
    const int64_t hs = h >> (3 - stage), ws = w >> (3 - stage);  // resolution entering the stage
    for (int i = 0; i < spec.drm_per_block; ++i)
      walk.drm("d" + std::to_string(stage + 1) + ".drm" + std::to_string(i),
               dec_in[stage], L, g, true, hs, ws);
    walk.resize("d" + std::to_string(stage + 1) + ".up", dec_in[stage], hs * 2, ws * 2);
    walk.conv_act("d" + std::to_string(stage + 1) + ".fuse", 1, dec_in[stage] + skip_w[stage],
                  skip_w[stage], hs * 2, ws * 2, true, true);
  }

  walk.conv_act("head", 3, sw[0], 3, h, w, true, true);

  if (spec.with_attention_branch) {
    const int64_t h2 = h / 2, w2 = w / 2, c = sw[1];
    walk.conv_act("attn.stem", 3, 3, c, h2, w2, true, true);
    for (int i = 0; i < 9; ++i)
      walk.drm("attn.drm" + std::to_string(i), c, L, g, true, h2, w2);
    walk.cbam("attn.cbam", c, 8, 7, h2, w2);
    walk.resize("attn.up", c, h, w);
    walk.conv_act("attn.head", 3, c, 3, h, w, true, true);
    walk.row("attn.gate", 0, 0, 3 * h * w);  // multiplicative attention on the residual
  }

  // Global residual addition plus the two-sided output clamp.
  walk.row("output.residual", 0, 0, 3 * h * w + 2 * 3 * h * w);
}

void walk_light(const ModelSpec& spec, int64_t h, int64_t w, CostWalk& walk) {
  const int64_t w0 = spec.stage_widths[0], w1 = spec.stage_widths[1];
  const int64_t L = spec.drm_dense_layers, g = spec.drm_growth;
  const int64_t h2 = h / 2, w2 = w / 2;
  const int64_t hp = h2 + h2 % 2, wp = w2 + w2 % 2;  // descent needs even extents
  const int64_t hq = hp / 2, wq = wp / 2;

  walk.resize("input.half", 3, h2, w2);
  walk.conv_act("stem", 3, 3, w0, hp, wp, true, true);
  walk.irb("irb0", w0, w0, 2, 1, hp, wp);
  walk.irb("irb1", w0, w1, 2, 2, hp, wp);
  for (int i = 0; i < spec.drm_per_block; ++i)
    walk.drm("drm" + std::to_string(i), w1, L, g, false, hq, wq);
  walk.irb("irb2", w1, w1, 2, 1, hq, wq);
  walk.resize("fuse.up", w1, hp, wp);
  walk.conv_act("fuse", 1, w1 + w0, w0, hp, wp, true, true);
  walk.irb("irb3", w0, w0, 2, 1, hp, wp);
  walk.conv_act("head", 3, w0, 3, hp, wp, true, true);
  walk.resize("output.up", 3, h, w);
  walk.row("output.residual", 0, 0, 3 * h * w + 2 * 3 * h * w);
}

}  // namespace

CostReport analyze_cost(const ModelSpec& spec, int64_t height, int64_t width, bool double_macs) {
  validate(spec);
  if (spec.kind == ModelKind::DrmUdcnet) {
    check(height >= 8 && width >= 8 && height % 8 == 0 && width % 8 == 0, ErrorCode::InvalidArgument,
          "analysis resolution must be divisible by 8 for this architecture, got " +
              std::to_string(height) + "x" + std::to_string(width));
  } else {
    check(height >= 4 && width >= 4 && height % 2 == 0 && width % 2 == 0, ErrorCode::InvalidArgument,
          "analysis resolution must be even and at least 4, got " + std::to_string(height) + "x" +
              std::to_string(width));
  }

  CostWalk walk(double_macs);
  if (spec.kind == ModelKind::DrmUdcnet)
    walk_full(spec, height, width, walk);
  else
    walk_light(spec, height, width, walk);

  CostReport report;
  report.model_id = model_id(spec);
  report.height = height;
  report.width = width;
  report.double_macs = double_macs;
  report.rows = walk.take();
  for (const CostRow& r : report.rows) {
    report.total_params += r.params;
    report.total_flops += r.flops;
  }
  return report;
}

int64_t count_flops(const ModelSpec& spec, int64_t height, int64_t width) {
  return analyze_cost(spec, height, width).total_flops;
}

// -------------------------------------------------------------- benchmarks

BenchReport benchmark(RestorationModel<float>& model, int64_t height, int64_t width, int runs,
                      int threads, int warmup) {
  check(runs >= 5, ErrorCode::InvalidArgument,
        "latency statistics need at least 5 runs, got " + std::to_string(runs));
  check(threads == 1, ErrorCode::InvalidArgument,
        "the compute kernels are single-threaded; threads must be 1");
  check(warmup >= 0, ErrorCode::InvalidArgument, "warmup count cannot be negative");

  BenchReport report;
  report.model_id = model_id(model.spec());
  report.height = height;
  report.width = width;
  report.threads = threads;

  try {
    Tensor<float> input({1, 3, height, width});
    Rng rng(0xbe9c5);
    for (auto& v : input.vec()) v = static_cast<float>(rng.uniform());
    Value<float> x = constant(input);

    for (int i = 0; i < warmup; ++i) (void)model.forward(nullptr, x, false);
    report.times_ms.reserve(static_cast<size_t>(runs));
    for (int i = 0; i < runs; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      (void)model.forward(nullptr, x, false);
      const auto t1 = std::chrono::steady_clock::now();
      report.times_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
  } catch (const std::bad_alloc&) {
    report.failed = true;
    report.failure = "exceeded the memory limit at " + std::to_string(height) + "x" +
                     std::to_string(width);
    report.times_ms.clear();
    return report;
  }

  report.min_ms = *std::min_element(report.times_ms.begin(), report.times_ms.end());
  report.max_ms = *std::max_element(report.times_ms.begin(), report.times_ms.end());
  double acc = 0.0;
  for (double t : report.times_ms) acc += t;
  report.mean_ms = acc / static_cast<double>(report.times_ms.size());
  double sq = 0.0;
  for (double t : report.times_ms) sq += (t - report.mean_ms) * (t - report.mean_ms);
  report.std_ms = std::sqrt(sq / static_cast<double>(report.times_ms.size() - 1));
  return report;
}

// -------------------------------------------------------------- rendering

namespace {

using nlohmann::json;

json cost_to_json(const CostReport& c) {
  json layers = json::array();
  for (const CostRow& r : c.rows) layers.push_back({{"path", r.path}, {"params", r.params}, {"flops", r.flops}});
  return {{"model", c.model_id}, {"height", c.height},        {"width", c.width},
          {"convention", c.convention()}, {"total_params", c.total_params},
          {"total_flops", c.total_flops}, {"layers", layers}};
}

json bench_to_json(const BenchReport& b) {
  return {{"model", b.model_id}, {"height", b.height},   {"width", b.width},
          {"threads", b.threads}, {"times_ms", b.times_ms}, {"mean_ms", b.mean_ms},
          {"std_ms", b.std_ms},   {"min_ms", b.min_ms},   {"max_ms", b.max_ms},
          {"failed", b.failed},   {"failure", b.failure}};
}

CostReport cost_from_json(const json& j) {
  CostReport c;
  c.model_id = j.at("model").get<std::string>();
  c.height = j.at("height").get<int64_t>();
  c.width = j.at("width").get<int64_t>();
  const std::string conv = j.at("convention").get<std::string>();
  check(conv == "flops=2*MACs" || conv == "flops=MACs", ErrorCode::FormatError,
        "unknown cost convention '" + conv + "'");
  c.double_macs = conv == "flops=2*MACs";
  c.total_params = j.at("total_params").get<int64_t>();
  c.total_flops = j.at("total_flops").get<int64_t>();
  for (const json& r : j.at("layers"))
    c.rows.push_back({r.at("path").get<std::string>(), r.at("params").get<int64_t>(),
                      r.at("flops").get<int64_t>()});
  return c;
}

BenchReport bench_from_json(const json& j) {
  BenchReport b;
  b.model_id = j.at("model").get<std::string>();
  b.height = j.at("height").get<int64_t>();
  b.width = j.at("width").get<int64_t>();
  b.threads = j.at("threads").get<int>();
  b.times_ms = j.at("times_ms").get<std::vector<double>>();
  b.mean_ms = j.at("mean_ms").get<double>();
  b.std_ms = j.at("std_ms").get<double>();
  b.min_ms = j.at("min_ms").get<double>();
  b.max_ms = j.at("max_ms").get<double>();
  b.failed = j.at("failed").get<bool>();
  b.failure = j.at("failure").get<std::string>();
  return b;
}

std::vector<ModelReport> sorted_by_flops(std::vector<ModelReport> reports) {
  std::stable_sort(reports.begin(), reports.end(), [](const ModelReport& a, const ModelReport& b) {
    return a.cost.total_flops < b.cost.total_flops;
  });
  return reports;
}

std::string render_table(const std::vector<ModelReport>& input) {
  const std::vector<ModelReport> reports = sorted_by_flops(input);
  std::string conventions;
  for (const ModelReport& m : reports) {
    const std::string c = m.cost.convention();
    if (conventions.find(c) == std::string::npos) {
      if (!conventions.empty()) conventions += ", ";
      conventions += c;
    }
  }

  std::string out;
  out += "# cost convention: " + conventions +
         " (dense kernels; elementwise, resize, and pooling ops counted individually)\n";
  out += "# latency: evaluation-mode forward only, monotonic clock, sample std\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-22s %-11s %12s %14s %10s %10s %8s\n", "model", "resolution",
                "params", "gflops", "mean_ms", "std_ms", "ssim");
  out += line;
  for (const ModelReport& m : reports) {
    const std::string res = std::to_string(m.cost.height) + "x" + std::to_string(m.cost.width);
    char mean[32] = "-", stddev[32] = "-", ssim[32] = "-";
    if (m.bench && !m.bench->failed) {
      std::snprintf(mean, sizeof mean, "%.3f", m.bench->mean_ms);
      std::snprintf(stddev, sizeof stddev, "%.3f", m.bench->std_ms);
    } else if (m.bench && m.bench->failed) {
      std::snprintf(mean, sizeof mean, "failed");
    }
    if (m.ssim) std::snprintf(ssim, sizeof ssim, "%.4f", *m.ssim);
    std::snprintf(line, sizeof line, "%-22s %-11s %12lld %14.3f %10s %10s %8s\n",
                  m.cost.model_id.c_str(), res.c_str(), static_cast<long long>(m.cost.total_params),
                  static_cast<double>(m.cost.total_flops) / 1e9, mean, stddev, ssim);
    out += line;
  }
  return out;
}

std::string render_json(const std::vector<ModelReport>& input) {
  const std::vector<ModelReport> reports = sorted_by_flops(input);
  json models = json::array();
  for (const ModelReport& m : reports) {
    json entry = {{"cost", cost_to_json(m.cost)}};
    if (m.bench) entry["bench"] = bench_to_json(*m.bench);
    if (m.ssim) entry["ssim"] = *m.ssim;
    models.push_back(std::move(entry));
  }
  return json{{"schema", "udcnet-report-v1"}, {"models", models}}.dump(2) + "\n";
}

}  // namespace

std::string render_report(const std::vector<ModelReport>& reports, ReportFormat format) {
  check(!reports.empty(), ErrorCode::InvalidArgument, "report list is empty");
  return format == ReportFormat::Table ? render_table(reports) : render_json(reports);
}

std::vector<ModelReport> parse_report(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("report is not valid structured text: ") + e.what());
  }
  try {
    check(doc.at("schema").get<std::string>() == "udcnet-report-v1", ErrorCode::FormatError,
          "unknown report schema");
    std::vector<ModelReport> out;
    for (const json& entry : doc.at("models")) {
      ModelReport m;
      m.cost = cost_from_json(entry.at("cost"));
      if (entry.contains("bench")) m.bench = bench_from_json(entry.at("bench"));
      if (entry.contains("ssim")) m.ssim = entry.at("ssim").get<double>();
      out.push_back(std::move(m));
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("report is missing required fields: ") + e.what());
  }
}

std::string render_layers(const CostReport& report) {
  std::string out = "# " + report.model_id + " at " + std::to_string(report.height) + "x" +
                    std::to_string(report.width) + ", " + report.convention() + "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-18s %12s %16s\n", "layer", "params", "flops");
  out += line;
  for (const CostRow& r : report.rows) {
    std::snprintf(line, sizeof line, "%-18s %12lld %16lld\n", r.path.c_str(),
                  static_cast<long long>(r.params), static_cast<long long>(r.flops));
    out += line;
  }
  std::snprintf(line, sizeof line, "%-18s %12lld %16lld\n", "total",
                static_cast<long long>(report.total_params), static_cast<long long>(report.total_flops));
  out += line;
  return out;
}

}  // namespace udc
