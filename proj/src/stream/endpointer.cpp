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

#include "kwsep/stream/endpointer.hpp"

#include <algorithm>
#include <cmath>

#include "kwsep/error.hpp"

namespace kwsep::stream {

void SmootherConfig::validate() const {
  if (span_frames < 1 || span_frames % 2 == 0) throw ValidationError("endpointer.smoothing_span", "must be odd and >= 1");
}

std::vector<float> smooth_series(std::span<const float> x, int span) {
  SmootherConfig{span}.validate();
  const long n = static_cast<long>(x.size());
  const long half = span / 2;
  std::vector<float> y(x.size());
  for (long i = 0; i < n; ++i) {
    const long lo = std::max(0L, i - half);
    const long hi = std::min(n - 1, i + half);
    double sum = 0.0;
    for (long j = lo; j <= hi; ++j) sum += x[j];
    y[i] = static_cast<float>(sum / static_cast<double>(hi - lo + 1));
  }
  return y;
}

PosteriorTrace smooth(const PosteriorTrace& trace, const SmootherConfig& cfg) {
  cfg.validate();
  PosteriorTrace out = trace;
  for (int k = 0; k < trace.n_outputs(); ++k) {
    const auto s = smooth_series(trace.series(k), cfg.span_frames);
    for (std::size_t i = 0; i < s.size(); ++i) out.values[i * trace.names.size() + k] = s[i];
  }
  return out;
}

namespace {

// Index of the maximum of x[lo..hi]; a tie for the maximum resolves to the
// middle of the first run of equal maxima.
std::size_t peak_index(std::span<const float> x, std::size_t lo, std::size_t hi) {
  std::size_t best = lo;
  for (std::size_t i = lo + 1; i <= hi; ++i) {
    if (x[i] > x[best]) best = i;
  }
  std::size_t run_end = best;
  while (run_end + 1 <= hi && x[run_end + 1] == x[best]) ++run_end;
  return best + (run_end - best) / 2;
}

}  // namespace

std::vector<DetectionEvent> detect(const PosteriorTrace& smoothed, const PosteriorTrace& raw, double threshold,
                                   double refractory_ms, int output_class) {
  if (smoothed.length() != raw.length() || smoothed.n_outputs() != raw.n_outputs()) {
    throw Error(ErrorCode::kShapeMismatch, "detect: smoothed and raw traces differ in shape");
  }
  if (output_class < 0 || output_class >= raw.n_outputs()) {
    throw Error(ErrorCode::kInvalidArgument, "detect: output class out of range");
  }
  const auto s = smoothed.series(output_class);
  const auto r = raw.series(output_class);
  std::vector<DetectionEvent> events;
  bool prev_above = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool above = s[i] >= threshold;
    const bool crossing = above && !prev_above;
    prev_above = above;
    if (!crossing) continue;
    const double t = smoothed.time_ms(i);
    if (!events.empty() && t - events.back().time_ms < refractory_ms) continue;
    // Raw peak over the stretch where the smoothed posterior stays above
    // threshold.
    std::size_t run_end = i;
    while (run_end + 1 < s.size() && s[run_end + 1] >= threshold) ++run_end;
    const std::size_t peak = peak_index(r, i, run_end);
    DetectionEvent e;
    e.time_ms = t;
    e.index = i;
    e.score = s[i];
    e.threshold = threshold;
    e.output_class = output_class;
    e.local_max_index = peak;
    e.local_max_ms = raw.time_ms(peak);
    e.local_max_score = r[peak];
    events.push_back(e);
  }
  return events;
}

const char* to_string(EndpointMethod m) {
  switch (m) {
    case EndpointMethod::kConst: return "const";
    case EndpointMethod::kRegressionThresCrossing: return "regression_thres_crossing";
    case EndpointMethod::kRegressionLocalMax: return "regression_local_max";
    case EndpointMethod::kAligned: return "aligned";
  }
  return "unknown";
}

EndpointMethod endpoint_method_from_string(const std::string& name) {
  for (auto m : {EndpointMethod::kConst, EndpointMethod::kRegressionThresCrossing, EndpointMethod::kRegressionLocalMax,
                 EndpointMethod::kAligned}) {
    if (name == to_string(m)) return m;
  }
  throw ValidationError("method",
                        "must be one of const, regression_thres_crossing, regression_local_max, aligned; got '" +
                            name + "'");
}

EndpointEstimate endpoint_const(const DetectionEvent& event, double median_duration_ms, double window_ms) {
  if (!(median_duration_ms > 0)) throw Error(ErrorCode::kInvalidArgument, "const endpointing needs a median duration > 0");
  EndpointEstimate e;
  const double center = event.local_max_ms - window_ms / 2;
  e.start_ms = center - median_duration_ms / 2;
  e.end_ms = center + median_duration_ms / 2;
  e.method = EndpointMethod::kConst;
  e.event = event;
  return e;
}

EndpointEstimate endpoint_regression(const DetectionEvent& event, const PosteriorTrace& regression,
                                     RegressionReadout readout, double window_ms) {
  const double t = readout == RegressionReadout::kThresCrossing ? event.time_ms : event.local_max_ms;
  const auto idx = regression.index_of(t);
  if (!idx) {
    throw Error(ErrorCode::kInvalidArgument, "regression readout time " + std::to_string(t) + " ms is outside the trace");
  }
  EndpointEstimate e;
  const double win_start = t - window_ms;
  e.start_ms = win_start + regression.at(*idx, 0) * window_ms;
  e.end_ms = win_start + regression.at(*idx, 1) * window_ms;
  e.method = readout == RegressionReadout::kThresCrossing ? EndpointMethod::kRegressionThresCrossing
                                                          : EndpointMethod::kRegressionLocalMax;
  e.event = event;
  return e;
}

EndpointEstimate endpoint_aligned(const DetectionEvent& event, const PosteriorTrace& smoothed,
                                  const AlignedSettings& settings) {
  if (smoothed.n_outputs() != models::kNumAlignmentClasses) {
    throw Error(ErrorCode::kModelKindMismatch, "model kind mismatch: aligned endpointing needs 4 outputs");
  }
  auto fallback = [&](const std::string& why) {
    auto e = endpoint_const(event, settings.median_duration_ms, settings.window_ms);
    e.method = EndpointMethod::kAligned;
    e.fallback = true;
    e.note = why;
    return e;
  };
  if (smoothed.length() == 0) return fallback("empty trace");
  const double lo_ms = event.local_max_ms - settings.search_ms;
  const double hi_ms = event.local_max_ms + settings.search_ms;
  const auto last = static_cast<long>(smoothed.length()) - 1;
  const long lo = std::clamp(static_cast<long>(std::ceil((lo_ms - smoothed.start_ms) / smoothed.hop_ms - 1e-9)), 0L, last);
  const long hi = std::clamp(static_cast<long>(std::floor((hi_ms - smoothed.start_ms) / smoothed.hop_ms + 1e-9)), 0L, last);

  const auto start_series = smoothed.series(static_cast<int>(models::AlignmentClass::kPostCenterStart));
  const auto end_series = smoothed.series(static_cast<int>(models::AlignmentClass::kEndAligned));
  const std::size_t ps = peak_index(start_series, static_cast<std::size_t>(lo), static_cast<std::size_t>(hi));
  const std::size_t pe = peak_index(end_series, static_cast<std::size_t>(lo), static_cast<std::size_t>(hi));
  if (start_series[ps] < settings.min_peak) return fallback("no post_center_start peak");
  if (end_series[pe] < settings.min_peak) return fallback("no end_aligned peak");

  EndpointEstimate e;
  e.start_ms = smoothed.time_ms(ps) - settings.window_ms / 2;
  e.end_ms = smoothed.time_ms(pe) - settings.margin_ms;
  e.method = EndpointMethod::kAligned;
  e.event = event;
  e.start_peak_ms = smoothed.time_ms(ps);
  e.end_peak_ms = smoothed.time_ms(pe);
  if (!(e.end_ms > e.start_ms)) {
    auto f = fallback("end estimate precedes start estimate");
    f.start_peak_ms = e.start_peak_ms;
    f.end_peak_ms = e.end_peak_ms;
    return f;
  }
  return e;
}

EndpointEstimate apply_sanity_band(EndpointEstimate est, double median_duration_ms, double window_ms) {
  const double d = est.end_ms - est.start_ms;
  if (d >= 0.2 * window_ms && d <= 3.0 * window_ms) return est;
  auto e = endpoint_const(est.event, median_duration_ms, window_ms);
  e.method = est.method;
  e.start_peak_ms = est.start_peak_ms;
  e.end_peak_ms = est.end_peak_ms;
  e.fallback = true;
  e.note = "duration " + std::to_string(d) + " ms outside the sanity band";
  return e;
}

void EndpointerConfig::validate() const {
  smoother.validate();
  if (!(threshold > 0 && threshold <= 1)) throw ValidationError("endpointer.threshold", "must be in (0, 1]");
  if (!(refractory_ms >= 0)) throw ValidationError("endpointer.refractory_ms", "must be >= 0");
  if (search_ms && !(*search_ms > 0)) throw ValidationError("endpointer.search_ms", "must be > 0");
  if (!(aligned_min_peak >= 0 && aligned_min_peak <= 1)) {
    throw ValidationError("endpointer.aligned_min_peak", "must be in [0, 1]");
  }
  if (median_duration_ms && !(*median_duration_ms > 0)) {
    throw ValidationError("endpointer.median_duration_ms", "must be > 0");
  }
  if (margin_ms && !(*margin_ms >= 0)) throw ValidationError("endpointer.margin_ms", "must be >= 0");
}

std::vector<EndpointMethod> supported_methods(const models::KwsModel& model) {
  switch (model.kind) {
    case models::ModelKind::kDetector: return {EndpointMethod::kConst};
    case models::ModelKind::kRegression:
      return {EndpointMethod::kConst, EndpointMethod::kRegressionThresCrossing, EndpointMethod::kRegressionLocalMax};
    case models::ModelKind::kMultiAligned: return {EndpointMethod::kConst, EndpointMethod::kAligned};
  }
  return {};
}

namespace {

double model_median(const models::KwsModel& model, const EndpointerConfig& cfg) {
  if (cfg.median_duration_ms) return *cfg.median_duration_ms;
  const double m = model.training.value("median_duration_ms", 0.0);
  if (!(m > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "model records no median keyword duration; set endpointer.median_duration_ms");
  }
  return m;
}

double model_margin(const models::KwsModel& model, const EndpointerConfig& cfg) {
  if (cfg.margin_ms) return *cfg.margin_ms;
  if (model.training.contains("window")) return model.training["window"].value("margin_ms", 50.0);
  return 50.0;
}

}  // namespace

StreamResult endpoint_traces(const models::KwsModel& model, StreamTraces traces, const EndpointerConfig& cfg,
                             std::span<const EndpointMethod> methods) {
  cfg.validate();
  const auto supported = supported_methods(model);
  for (auto m : methods) {
    if (std::find(supported.begin(), supported.end(), m) == supported.end()) {
      throw Error(ErrorCode::kModelKindMismatch, std::string("model kind mismatch: method ") + to_string(m) +
                                                     " is not available for a " + models::to_string(model.kind) +
                                                     " model");
    }
  }
  StreamResult res;
  res.traces = std::move(traces);
  res.smoothed = smooth(res.traces.posterior, cfg.smoother);
  res.events = detect(res.smoothed, res.traces.posterior, cfg.threshold, cfg.refractory_ms, 0);
  const double window_ms = model.window_ms();
  const double median = methods.empty() ? 0.0 : model_median(model, cfg);
  AlignedSettings al;
  al.window_ms = window_ms;
  al.margin_ms = model_margin(model, cfg);
  al.search_ms = cfg.search_ms.value_or(window_ms);
  al.min_peak = cfg.aligned_min_peak;
  al.median_duration_ms = median;
  for (const auto& ev : res.events) {
    for (auto m : methods) {
      EndpointEstimate e;
      switch (m) {
        case EndpointMethod::kConst: e = endpoint_const(ev, median, window_ms); break;
        case EndpointMethod::kRegressionThresCrossing:
          e = apply_sanity_band(
              endpoint_regression(ev, *res.traces.regression, RegressionReadout::kThresCrossing, window_ms), median,
              window_ms);
          break;
        case EndpointMethod::kRegressionLocalMax:
          e = apply_sanity_band(
              endpoint_regression(ev, *res.traces.regression, RegressionReadout::kLocalMax, window_ms), median,
              window_ms);
          break;
        case EndpointMethod::kAligned:
          e = apply_sanity_band(endpoint_aligned(ev, res.smoothed, al), median, window_ms);
          break;
      }
      res.estimates.push_back(std::move(e));
    }
  }
  return res;
}

StreamResult run_endpointer(const models::KwsModel& model, const audio::FeatureMatrix& raw,
                            const EndpointerConfig& cfg, std::span<const EndpointMethod> methods) {
  return endpoint_traces(model, sliding_window_infer(model, raw), cfg, methods);
}

}  // namespace kwsep::stream
