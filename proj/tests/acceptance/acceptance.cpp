// Copyright 2026 The kwsep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance gate. Prints one "PASS"/"FAIL" line per criterion and exits
// nonzero when any criterion fails. Pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>

#include "kwsep/config/run_config.hpp"
#include "kwsep/data/corpus.hpp"
#include "kwsep/eval/harness.hpp"
#include "kwsep/eval/metrics.hpp"
#include "kwsep/eval/report.hpp"
#include "kwsep/nn/checkpoint.hpp"
#include "kwsep/nn/gradcheck.hpp"
#include "kwsep/pipeline.hpp"
#include "kwsep/stream/endpointer.hpp"
#include "kwsep/stream/trace.hpp"

#ifndef KWSEP_DESK_PRESET
#error "KWSEP_DESK_PRESET must name the desk preset config"
#endif

using namespace kwsep;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

config::RunConfig desk(std::uint64_t seed) {
  auto cfg = config::load_run_config(KWSEP_DESK_PRESET);
  cfg.seed = seed;
  cfg.train.seed = seed;
  cfg.validate();
  return cfg;
}

// A desk config shrunk for criteria that only need a briefly trained model.
config::RunConfig small_desk(std::uint64_t seed, int n_per_class) {
  auto cfg = desk(seed);
  cfg.corpus.n_positive = n_per_class;
  cfg.corpus.n_negative = n_per_class;
  cfg.train.eval_every = 0;
  return cfg;
}

models::KwsModel train_stage(config::RunConfig cfg, train::TrainMode mode, int steps,
                             std::span<const data::StreamRecord> corpus, const models::KwsModel* detector) {
  cfg.train.mode = mode;
  cfg.train.steps = steps;
  return pipeline::train(cfg, corpus, detector, nullptr).model;
}

std::vector<data::StreamRecord> eval_corpus(const config::RunConfig& cfg, int n_per_class) {
  return data::generate_corpus(cfg.corpus.synth, cfg.corpus.window, n_per_class, n_per_class,
                               derive_seed(config::corpus_seed(cfg.seed), 0x6576616c));
}

// ---------------------------------------------------------------------------
// 1. gradcheck

nn::Tensor<double> random_tensor(nn::Shape shape, Rng& rng) {
  nn::Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = normal(rng);
  return t;
}

nn::Shape batched(nn::Shape s, int n) {
  s.insert(s.begin(), n);
  return s;
}

Verdict gradient_correctness() {
  const auto t0 = Clock::now();
  Rng rng(101);
  int configs = 0;
  double worst = 0.0;
  std::string worst_name;
  std::set<nn::LayerKind> kinds;

  auto record = [&](const nn::GradcheckReport& r, const std::string& label) {
    ++configs;
    if (r.max_rel_error > worst || r.checked == 0) {
      worst = r.checked == 0 ? INFINITY : r.max_rel_error;
      worst_name = label + " " + r.worst;
    }
  };

  // Single layers on random shapes, checked against a random projection of
  // their output.
  for (int i = 0; i < 21; ++i) {
    const int c = 1 + uniform_int(rng, 0, 2), h = 5 + uniform_int(rng, 0, 4), w = 5 + uniform_int(rng, 0, 4);
    nn::Shape in{c, h, w};
    nn::LayerSpec spec;
    switch (i % 7) {
      case 0: {
        spec = nn::LayerSpec::conv2d("conv", 1 + uniform_int(rng, 0, 3), 1 + uniform_int(rng, 0, 2),
                                     1 + uniform_int(rng, 0, 2), 1 + uniform_int(rng, 0, 1),
                                     1 + uniform_int(rng, 0, 1));
        spec.pad_h = uniform_int(rng, 0, 1);
        spec.pad_w = uniform_int(rng, 0, 1);
        break;
      }
      case 1:
        spec = nn::LayerSpec::maxpool2d("pool", 2, 1 + uniform_int(rng, 0, 1), 2, 1 + uniform_int(rng, 0, 1));
        break;
      case 2:
        spec = nn::LayerSpec::fully_connected("fc", 1 + uniform_int(rng, 0, 5));
        break;
      case 3:
        spec = nn::LayerSpec::relu("relu");
        break;
      case 4:
        spec = nn::LayerSpec::batchnorm("bn");
        break;
      case 5:
        spec = nn::LayerSpec::dropout("drop", uniform(rng, 0.1, 0.5));
        break;
      default:
        spec = nn::LayerSpec::softmax("softmax");
        in = {1 + static_cast<int>(uniform_int(rng, 1, 6))};
        break;
    }
    kinds.insert(spec.kind);
    Rng init(rng());
    auto net = nn::Network<double>::build(in, {spec}, init);
    const int n = 3;
    nn::GradcheckLoss loss;
    loss.projection = random_tensor(batched(net.output_shape(), n), rng);
    nn::GradcheckOptions opts;
    opts.check_input = true;
    opts.seed = rng();
    record(nn::gradcheck(net, random_tensor(batched(in, n), rng), loss, opts), to_string(spec.kind));
  }

  // Whole models at reduced size: detector, multi-aligned, and the
  // regression head in frozen and multi-task form.
  for (int i = 0; i < 4; ++i) {
    models::DetectorConfig cfg;
    cfg.input_frames = 48 + 3 * static_cast<int>(uniform_int(rng, 0, 2));
    cfg.input_dims = 24 + static_cast<int>(uniform_int(rng, 0, 4));
    cfg.conv = {{{static_cast<int>(uniform_int(rng, 1, 3)), 5, 5, 1, 1},
                 {2, 3, 3, 3, 1},
                 {2, 3, 3, 1, 1},
                 {2, 3, 3, 1, 1},
                 {2, 3, 3, 1, 1}}};
    cfg.fc_hidden = {static_cast<int>(uniform_int(rng, 3, 6)), 4};
    const std::uint64_t seed = rng();
    models::KwsModel m;
    std::string label;
    if (i == 1) {
      m = models::build_multi_aligned(cfg, seed);
      label = "multi_aligned";
    } else {
      m = models::build_detector(cfg, seed);
      label = "detector";
    }
    if (i >= 2) {
      models::RegressionHeadConfig head;
      head.channels = 3;
      m = models::attach_regression_head(m, i == 2, seed + 1, head);
      label = i == 2 ? "regression_frozen" : "regression_multitask";
    }
    auto net = nn::network_cast<double>(m.net);
    const int n = 4;
    nn::GradcheckLoss loss;
    for (int k = 0; k < n; ++k) loss.labels.push_back(static_cast<int>(uniform_int(rng, 0, m.n_outputs() - 1)));
    if (m.head) {
      loss.regression_target = random_tensor({n, 2}, rng);
      loss.freeze_main = m.frozen_backbone;
    }
    nn::GradcheckOptions opts;
    opts.max_coords_per_tensor = 12;
    opts.seed = rng();
    record(nn::gradcheck(net, random_tensor({n, 1, cfg.input_frames, cfg.input_dims}, rng), loss, opts), label);
  }

  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = configs >= 20 && kinds.size() == 7 && worst < 1e-4 && secs < 60.0;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d configurations, %zu layer kinds, max rel error %.3g (%s), %.1fs", configs,
                kinds.size(), worst, worst_name.c_str(), secs);
  v.detail = buf;
  return v;
}

// ---------------------------------------------------------------------------
// 2. conv/pool oracles

nn::Tensor<double> brute_conv(const nn::Tensor<double>& x, const nn::Tensor<double>& w, const nn::Tensor<double>& b,
                              const nn::LayerSpec& s) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int oh = (h + 2 * s.pad_h - kh) / s.stride_h + 1, ow = (wd + 2 * s.pad_w - kw) / s.stride_w + 1;
  nn::Tensor<double> y({n, co, oh, ow});
  for (int i = 0; i < n; ++i)
    for (int o = 0; o < co; ++o)
      for (int r = 0; r < oh; ++r)
        for (int q = 0; q < ow; ++q) {
          double acc = b[o];
          for (int ci = 0; ci < c; ++ci)
            for (int u = 0; u < kh; ++u)
              for (int v = 0; v < kw; ++v) {
                const int yy = r * s.stride_h + u - s.pad_h, xx = q * s.stride_w + v - s.pad_w;
                if (yy < 0 || yy >= h || xx < 0 || xx >= wd) continue;
                acc += x[((static_cast<std::size_t>(i) * c + ci) * h + yy) * wd + xx] *
                       w[((static_cast<std::size_t>(o) * c + ci) * kh + u) * kw + v];
              }
          y[((static_cast<std::size_t>(i) * co + o) * oh + r) * ow + q] = acc;
        }
  return y;
}

nn::Tensor<double> brute_pool(const nn::Tensor<double>& x, const nn::LayerSpec& s) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int oh = (h - s.kernel_h) / s.stride_h + 1, ow = (wd - s.kernel_w) / s.stride_w + 1;
  nn::Tensor<double> y({n, c, oh, ow});
  for (int i = 0; i < n * c; ++i)
    for (int r = 0; r < oh; ++r)
      for (int q = 0; q < ow; ++q) {
        double m = -INFINITY;
        for (int u = 0; u < s.kernel_h; ++u)
          for (int v = 0; v < s.kernel_w; ++v) {
            m = std::max(m, x[(static_cast<std::size_t>(i) * h + r * s.stride_h + u) * wd + q * s.stride_w + v]);
          }
        y[(static_cast<std::size_t>(i) * oh + r) * ow + q] = m;
      }
  return y;
}

double max_abs_diff(const nn::Tensor<double>& a, const nn::Tensor<double>& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Verdict oracle_equivalence() {
  Rng rng(202);
  double worst_conv = 0.0, worst_pool = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int c = uniform_int(rng, 1, 4), h = uniform_int(rng, 4, 14), w = uniform_int(rng, 4, 14);
    auto spec = nn::LayerSpec::conv2d("c", uniform_int(rng, 1, 5), uniform_int(rng, 1, 4), uniform_int(rng, 1, 4),
                                      uniform_int(rng, 1, 3), uniform_int(rng, 1, 3));
    spec.pad_h = uniform_int(rng, 0, 1);
    spec.pad_w = uniform_int(rng, 0, 1);
    auto layer = nn::make_layer<double>(spec, {c, h, w});
    Rng init(rng());
    layer->initialize(init);
    auto params = layer->parameters();
    params[1]->value = random_tensor({spec.out_channels}, rng);
    const auto x = random_tensor({2, c, h, w}, rng);
    nn::Tensor<double> y;
    layer->infer(x, y);
    worst_conv = std::max(worst_conv, max_abs_diff(y, brute_conv(x, params[0]->value, params[1]->value, spec)));
  }
  for (int t = 0; t < 100; ++t) {
    const int c = uniform_int(rng, 1, 4), h = uniform_int(rng, 4, 14), w = uniform_int(rng, 4, 14);
    auto spec = nn::LayerSpec::maxpool2d("p", uniform_int(rng, 1, 4), uniform_int(rng, 1, 4), uniform_int(rng, 1, 3),
                                         uniform_int(rng, 1, 3));
    auto layer = nn::make_layer<double>(spec, {c, h, w});
    const auto x = random_tensor({2, c, h, w}, rng);
    nn::Tensor<double> y;
    layer->infer(x, y);
    worst_pool = std::max(worst_pool, max_abs_diff(y, brute_pool(x, spec)));
  }
  Verdict v;
  v.pass = worst_conv <= 1e-12 && worst_pool <= 1e-12;
  char buf[160];
  std::snprintf(buf, sizeof buf, "100 conv cases max |diff| %.3g, 100 pool cases max |diff| %.3g", worst_conv,
                worst_pool);
  v.detail = buf;
  return v;
}

// ---------------------------------------------------------------------------
// 3. streaming / batch equivalence

Verdict streaming_equivalence() {
  const auto cfg = desk(3);
  auto model = models::build_multi_aligned(cfg.detector, 33);
  model.features = cfg.features;
  model.stats.mean.assign(cfg.features.n_mels, -5.0);
  model.stats.var.assign(cfg.features.n_mels, 4.0);
  auto head = models::attach_regression_head(models::build_detector(cfg.detector, 34), true, 35, cfg.regression_head);
  head.features = model.features;
  head.stats = model.stats;

  const auto streams = data::generate_corpus(cfg.corpus.synth, cfg.corpus.window, 25, 25, 303);
  const int frames = cfg.corpus.window.window_frames, dims = cfg.features.n_mels;
  double worst = 0.0;
  std::size_t compared = 0;
  bool shapes_ok = true;
  for (std::size_t s = 0; s < streams.size(); ++s) {
    const auto& m = s % 2 == 0 ? model : head;
    const auto raw = audio::lfbe(streams[s].audio, m.features);
    const auto batch = stream::sliding_window_infer(m, raw, 17);

    // Whole-stream reference: the stream normalized in one piece, every
    // window cut from it, all run as one batch.
    const auto norm = audio::normalize(raw, m.stats);
    const int n_windows = raw.n_frames - frames + 1;
    nn::Tensor<float> all({n_windows, 1, frames, dims});
    for (int w = 0; w < n_windows; ++w) {
      std::copy_n(norm.values.data() + static_cast<std::size_t>(w) * dims, static_cast<std::size_t>(frames) * dims,
                  all.data() + static_cast<std::size_t>(w) * frames * dims);
    }
    const auto ref = models::forward_detection(m, all);
    stream::StreamingInferencer live(m);
    for (int f = 0; f < raw.n_frames; ++f) {
      live.push_frame(std::span<const float>(raw.values.data() + static_cast<std::size_t>(f) * dims, dims));
    }
    const auto& online = live.traces();
    if (batch.posterior.length() != static_cast<std::size_t>(n_windows) ||
        online.posterior.values.size() != batch.posterior.values.size()) {
      shapes_ok = false;
      continue;
    }
    for (std::size_t i = 0; i < batch.posterior.values.size(); ++i) {
      worst = std::max(worst, static_cast<double>(std::abs(batch.posterior.values[i] - ref[i])));
      worst = std::max(worst, static_cast<double>(std::abs(batch.posterior.values[i] - online.posterior.values[i])));
      ++compared;
    }
    if (m.head) {
      const auto reg = models::forward_regression(m, all);
      if (!batch.regression || !online.regression) {
        shapes_ok = false;
        continue;
      }
      for (std::size_t i = 0; i < reg.size(); ++i) {
        worst = std::max(worst, static_cast<double>(std::abs(batch.regression->values[i] - reg[i])));
        worst = std::max(worst,
                         static_cast<double>(std::abs(batch.regression->values[i] - online.regression->values[i])));
      }
    }
  }
  Verdict v;
  v.pass = shapes_ok && worst <= 1e-6;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%zu streams, %zu posterior values, max |diff| %.3g%s", streams.size(), compared,
                worst, shapes_ok ? "" : ", shape mismatch");
  v.detail = buf;
  return v;
}

// ---------------------------------------------------------------------------
// 4. frozen backbone

Verdict frozen_backbone() {
  const auto cfg = small_desk(4, 60);
  const auto corpus = pipeline::make_corpus(cfg);
  const auto detector = train_stage(cfg, train::TrainMode::kDetector, 150, corpus, nullptr);
  const auto regression = train_stage(cfg, train::TrainMode::kRegressionFrozen, 150, corpus, &detector);

  const auto probe = data::synth_stream(cfg.corpus.synth, cfg.corpus.window, 404, true, "probe");
  const auto raw = audio::lfbe(probe.audio, detector.features);
  const auto a = stream::sliding_window_infer(detector, raw).posterior.values;
  const auto b = stream::sliding_window_infer(regression, raw).posterior.values;
  const bool trace_same = a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;

  const auto ev = eval_corpus(cfg, 30);
  std::vector<eval::EvalModel> models{{"detector", &detector}, {"regression", &regression}};
  auto ecfg = cfg;
  ecfg.eval.methods = {"const"};
  const auto report = pipeline::evaluate(ecfg, models, ev).report;
  const auto& d0 = report.detection.at(0);
  const auto& d1 = report.detection.at(1);
  const bool frr_same = d0.at_target == d1.at_target && d0.operating == d1.operating;

  Verdict v;
  v.pass = trace_same && frr_same && regression.frozen_backbone;
  char buf[200];
  std::snprintf(buf, sizeof buf, "trace %s (%zu values), FRR@FAR %.4f vs %.4f", trace_same ? "bit-identical" : "differs",
                a.size(), d0.at_target.point.frr, d1.at_target.point.frr);
  v.detail = buf;
  return v;
}

// ---------------------------------------------------------------------------
// 5. minibatch composition

Verdict minibatch_composition() {
  const auto cfg = small_desk(5, 20);
  const auto featured = data::extract_features(pipeline::make_corpus(cfg), cfg.features);
  data::MinibatchSampler sampler(featured, data::SamplerMode::kMultiAligned, cfg.corpus.window, 505);
  std::array<int, 4> counts{};
  int total = 0;
  while (total < 10000) {
    for (const auto& ex : sampler.next(std::min(250, 10000 - total))) {
      ++counts[static_cast<int>(ex.alignment)];
      ++total;
    }
  }
  const std::array<double, 4> expected{0.25, 0.125, 0.125, 0.5};
  Verdict v;
  v.pass = true;
  std::ostringstream os;
  os << "n=" << total;
  const char* names[] = {"center", "start", "end", "negative"};
  for (int k = 0; k < 4; ++k) {
    const double frac = static_cast<double>(counts[k]) / total;
    if (std::abs(frac - expected[k]) > 0.015) v.pass = false;
    char buf[64];
    std::snprintf(buf, sizeof buf, " %s %.2f%%", names[k], 100.0 * frac);
    os << buf;
  }
  v.detail = os.str();
  return v;
}

// ---------------------------------------------------------------------------
// 6 and 7. desk-scale endpointing

struct SeedOutcome {
  std::uint64_t seed = 0;
  eval::EvalReport report;
  double seconds = 0.0;
};

const eval::MethodReport* row(const eval::EvalReport& r, const std::string& method, const std::string& model) {
  for (const auto& m : r.methods) {
    if (m.method == method && m.model == model) return &m;
  }
  return nullptr;
}

std::vector<SeedOutcome>& desk_runs() {
  static std::vector<SeedOutcome> runs;
  if (!runs.empty()) return runs;
  const int detector_steps = 600, regression_steps = 400;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto t0 = Clock::now();
    const auto cfg = desk(seed);
    const auto corpus = pipeline::make_corpus(cfg);
    const auto detector = train_stage(cfg, train::TrainMode::kDetector, detector_steps, corpus, nullptr);
    const auto regression = train_stage(cfg, train::TrainMode::kRegressionFrozen, regression_steps, corpus, &detector);
    const auto multi = train_stage(cfg, train::TrainMode::kMultiAligned, cfg.train.steps, corpus, nullptr);
    const auto ev = eval_corpus(cfg, 100);
    std::vector<eval::EvalModel> models{{"detector", &detector}, {"regression", &regression}, {"multi", &multi}};
    auto ecfg = cfg;
    ecfg.eval.methods = {"const", "regression_thres_crossing", "regression_local_max", "aligned"};
    SeedOutcome out;
    out.seed = seed;
    out.report = pipeline::evaluate(ecfg, models, ev).report;
    out.seconds = seconds_since(t0);
    std::cout << "  seed " << seed << " (" << static_cast<int>(out.seconds) << "s)\n";
    eval::write_summary_csv(std::cout, out.report);
    std::cout.flush();
    runs.push_back(std::move(out));
  }
  return runs;
}

std::string fmt_row(const char* label, const eval::MethodReport* m) {
  if (m == nullptr) return std::string(label) + " missing";
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s %.1f/%.1f", label, m->stats.all.start_std_ms, m->stats.all.end_std_ms);
  return buf;
}

Verdict endpointing_ordering() {
  const auto& runs = desk_runs();
  Verdict v;
  v.pass = true;
  double total = 0.0;
  std::ostringstream os;
  for (const auto& run : runs) {
    total += run.seconds;
    const auto* base = row(run.report, "const", "detector");
    const auto* aligned = row(run.report, "aligned", "multi");
    const auto* thres = row(run.report, "regression_thres_crossing", "regression");
    const auto* local = row(run.report, "regression_local_max", "regression");
    auto beats = [&](const eval::MethodReport* m) {
      return m != nullptr && base != nullptr && m->stats.all.start_std_ms < base->stats.all.start_std_ms &&
             m->stats.all.end_std_ms < base->stats.all.end_std_ms;
    };
    const bool ok = beats(aligned) && beats(thres) && beats(local);
    v.pass = v.pass && ok;
    os << "[seed " << run.seed << (ok ? " ok: " : " FAILS: ") << fmt_row("const", base) << ", "
       << fmt_row("aligned", aligned) << ", " << fmt_row("thres", thres) << ", " << fmt_row("local_max", local)
       << "] ";
  }
  v.pass = v.pass && total < 1800.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "total %.0fs", total);
  os << buf;
  v.detail = os.str();
  return v;
}

Verdict aligned_quality() {
  const auto& runs = desk_runs();
  Verdict v;
  v.pass = true;
  std::ostringstream os;
  for (const auto& run : runs) {
    const auto* aligned = row(run.report, "aligned", "multi");
    const bool ok = aligned != nullptr && aligned->stats.all.start_std_ms < 100.0 && aligned->stats.all.end_std_ms < 100.0;
    v.pass = v.pass && ok;
    os << "seed " << run.seed << ": " << fmt_row("aligned start/end std", aligned) << "; ";
    for (const auto& p : run.report.peak_order) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "peak order %.2f; ", p.rate());
      os << buf;
    }
  }
  v.detail = os.str();
  return v;
}

// ---------------------------------------------------------------------------
// 8. endpoint arithmetic

stream::PosteriorTrace make_trace(std::vector<std::string> names, double start_ms, std::vector<float> values) {
  stream::PosteriorTrace t;
  t.names = std::move(names);
  t.start_ms = start_ms;
  t.values = std::move(values);
  return t;
}

Verdict offset_arithmetic() {
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  stream::DetectionEvent ev;
  ev.time_ms = ev.local_max_ms = 1500.0;
  const auto c = stream::endpoint_const(ev, 600.0, 1000.0);
  expect(c.start_ms == 700.0 && c.end_ms == 1300.0, "const t=1500 W=1000 median=600");

  // Regression trace holding the same offsets at every time step.
  auto reg_trace = [](double start_rel, double end_rel) {
    std::vector<float> v;
    for (int i = 0; i < 300; ++i) {
      v.push_back(static_cast<float>(start_rel));
      v.push_back(static_cast<float>(end_rel));
    }
    return make_trace({"start_rel", "end_rel"}, 1000.0, v);
  };
  stream::DetectionEvent rv;
  rv.time_ms = rv.local_max_ms = 2000.0;
  rv.index = rv.local_max_index = 100;
  for (auto readout : {stream::RegressionReadout::kThresCrossing, stream::RegressionReadout::kLocalMax}) {
    const auto a = stream::endpoint_regression(rv, reg_trace(0.25, 0.75), readout, 1000.0);
    expect(a.start_ms == 1250.0 && a.end_ms == 1750.0, "regression t=2000 (0.25, 0.75)");
    const auto b = stream::endpoint_regression(rv, reg_trace(-0.25, 1.25), readout, 1000.0);
    expect(b.start_ms == 750.0 && b.end_ms == 2250.0, "regression t=2000 (-0.25, 1.25)");
  }
  // The float32 trace cannot hold 0.2 exactly; the float-nearest value
  // must still land within float rounding of the decimal example.
  const auto d = stream::endpoint_regression(rv, reg_trace(0.2, 0.8), stream::RegressionReadout::kLocalMax, 1000.0);
  expect(std::abs(d.start_ms - 1200.0) < 1e-4 && std::abs(d.end_ms - 1800.0) < 1e-4, "regression t=2000 (0.2, 0.8)");
  const auto e = stream::endpoint_regression(rv, reg_trace(-0.2, 1.2), stream::RegressionReadout::kLocalMax, 1000.0);
  expect(std::abs(e.start_ms - 800.0) < 1e-4 && std::abs(e.end_ms - 2200.0) < 1e-4, "regression t=2000 (-0.2, 1.2)");

  // Aligned: post_center_start peaks at 1500, end_aligned at 1800.
  std::vector<float> v;
  const double t0 = 1000.0;
  for (int i = 0; i < 150; ++i) {
    const double t = t0 + 10.0 * i;
    const float center = t == 1600.0 ? 0.9f : 0.0f;
    const float start = t == 1500.0 ? 0.9f : 0.0f;
    const float end = t == 1800.0 ? 0.9f : 0.0f;
    v.insert(v.end(), {center, start, end, 1.0f - center - start - end});
  }
  const auto smoothed = make_trace({"center", "post_center_start", "end_aligned", "negative"}, t0, v);
  stream::DetectionEvent ae;
  ae.time_ms = ae.local_max_ms = 1600.0;
  ae.index = ae.local_max_index = 60;
  stream::AlignedSettings as;
  as.window_ms = 1000.0;
  as.margin_ms = 50.0;
  as.search_ms = 1000.0;
  as.median_duration_ms = 600.0;
  const auto al = stream::endpoint_aligned(ae, smoothed, as);
  expect(!al.fallback && al.start_ms == 1000.0 && al.end_ms == 1750.0, "aligned t_s=1500 t_e=1800 margin 50");

  expect(stream::frame_to_ms(0, 10.0) == 0.0 && stream::frame_to_ms(7, 10.0) == 70.0, "frame_to_ms");
  bool round_trip = true;
  for (long f = 0; f < 100000; ++f) round_trip = round_trip && stream::ms_to_frame(stream::frame_to_ms(f, 10.0), 10.0) == f;
  expect(round_trip, "frame round trip");

  Verdict out;
  out.pass = failures.empty();
  out.detail = failures.empty() ? "const, regression (both readouts), aligned, frame conversions exact" : "";
  for (const auto& f : failures) out.detail += "failed: " + f + "; ";
  return out;
}

// ---------------------------------------------------------------------------
// 9. metrics

Verdict metric_properties() {
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  auto pair = [](double start_err, double end_err, double start = 1000.0, double dur = 600.0) {
    eval::MatchedPair p;
    p.stream_id = "s";
    p.truth = {start, start + dur};
    p.estimate = {start + start_err, start + dur + end_err};
    return p;
  };
  std::vector<eval::MatchedPair> three{pair(-10, -10), pair(0, 0), pair(10, 10)};
  const auto st = eval::partition_stats(three);
  expect(std::abs(st.start_std_ms - std::sqrt(200.0 / 3.0)) < 1e-12, "std of {-10,0,10}");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", st.start_std_ms);
  expect(std::string(buf) == "8.1650", "std of {-10,0,10} prints 8.1650");

  Rng rng(909);
  bool shift_ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<eval::MatchedPair> ps, shifted;
    const int n = uniform_int(rng, 2, 40);
    const double shift = uniform(rng, -300.0, 300.0);
    for (int i = 0; i < n; ++i) {
      const double s = uniform(rng, -80, 80), e = uniform(rng, -80, 80);
      ps.push_back(pair(s, e));
      shifted.push_back(pair(s + shift, e + shift));
    }
    const auto a = eval::partition_stats(ps), b = eval::partition_stats(shifted);
    shift_ok = shift_ok && std::abs(a.start_std_ms - b.start_std_ms) < 1e-9 &&
               std::abs(a.end_std_ms - b.end_std_ms) < 1e-9;
  }
  expect(shift_ok, "shift invariance");

  bool monotone = true;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> pos, neg;
    const int np = uniform_int(rng, 1, 50), nn_ = uniform_int(rng, 1, 50);
    for (int i = 0; i < np; ++i) pos.push_back(std::round(uniform01(rng) * 20) / 20);
    for (int i = 0; i < nn_; ++i) neg.push_back(std::round(uniform01(rng) * 20) / 20);
    const auto sweep = eval::far_sweep(pos, neg);
    for (std::size_t i = 1; i < sweep.size(); ++i) {
      monotone = monotone && sweep[i].threshold > sweep[i - 1].threshold && sweep[i].far <= sweep[i - 1].far &&
                 sweep[i].frr >= sweep[i - 1].frr;
    }
  }
  expect(monotone, "FAR/FRR monotonicity");

  std::vector<double> pos{0.9, 0.8}, neg{0.1, 0.2};
  const auto sep = eval::frr_at_far(pos, neg, 0.0);
  expect(sep.point.far == 0.0 && sep.point.frr == 0.0, "separable scores FRR 0 at FAR 0");

  Verdict v;
  v.pass = failures.empty();
  v.detail = failures.empty() ? "8.1650 example, shift invariance (200 trials), sweep monotonicity (200 trials)" : "";
  for (const auto& f : failures) v.detail += "failed: " + f + "; ";
  return v;
}

// ---------------------------------------------------------------------------
// 10. reproducibility

struct RunArtifacts {
  std::string manifest;
  std::string wav_digest;
  std::string detector;
  std::string multi;
  std::string report;
};

RunArtifacts reproducible_run(const fs::path& dir) {
  auto cfg = small_desk(10, 30);
  cfg.train.eval_every = 50;
  RunArtifacts out;
  const auto corpus = pipeline::make_corpus(cfg);
  data::write_corpus(dir / "corpus", corpus);
  out.manifest = nn::read_file_bytes(data::manifest_path(dir / "corpus"));
  std::uint64_t h = eval::fnv1a64("");
  for (const auto& rec : corpus) h = eval::fnv1a64(nn::read_file_bytes(dir / "corpus" / "wav" / (rec.id + ".wav")), h);
  out.wav_digest = eval::hex64(h);

  const auto loaded = data::load_corpus(dir / "corpus");
  const auto det = train_stage(cfg, train::TrainMode::kDetector, 100, loaded, nullptr);
  const auto multi = train_stage(cfg, train::TrainMode::kMultiAligned, 100, loaded, nullptr);
  models::save_model(dir / "detector.ckpt", det);
  models::save_model(dir / "multi.ckpt", multi);
  out.detector = nn::read_file_bytes(dir / "detector.ckpt");
  out.multi = nn::read_file_bytes(dir / "multi.ckpt");

  const auto ev = eval_corpus(cfg, 15);
  std::vector<eval::EvalModel> models{{"detector", &det}, {"multi", &multi}};
  eval::write_report(dir / "report.json", pipeline::evaluate(cfg, models, ev).report);
  out.report = nn::read_file_bytes(dir / "report.json");
  return out;
}

Verdict reproducibility() {
  const auto root = fs::temp_directory_path() / ("kwsep_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const auto a = reproducible_run(root / "a");
  const auto b = reproducible_run(root / "b");
  fs::remove_all(root);
  std::vector<std::string> differ;
  if (a.manifest != b.manifest || a.manifest.empty()) differ.push_back("manifest");
  if (a.wav_digest != b.wav_digest) differ.push_back("wav");
  if (a.detector != b.detector || a.detector.empty()) differ.push_back("detector checkpoint");
  if (a.multi != b.multi || a.multi.empty()) differ.push_back("multi checkpoint");
  if (a.report != b.report || a.report.empty()) differ.push_back("report");
  Verdict v;
  v.pass = differ.empty();
  v.detail = "manifest, WAVs, 2 checkpoints, report";
  for (const auto& d : differ) v.detail += "; " + d + " differs";
  if (v.pass) v.detail += " byte-identical across two runs";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", gradient_correctness},
      {2, "conv/pool oracle equivalence", oracle_equivalence},
      {3, "streaming/batch equivalence", streaming_equivalence},
      {4, "frozen backbone", frozen_backbone},
      {5, "minibatch composition", minibatch_composition},
      {6, "desk-scale endpointing ordering", endpointing_ordering},
      {7, "desk-scale aligned quality", aligned_quality},
      {8, "offset arithmetic", offset_arithmetic},
      {9, "evaluation metrics", metric_properties},
      {10, "reproducibility", reproducibility},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS" : "FAIL") << " " << c.id << " " << c.name << ": " << v.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
