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

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kwsep/stream/trace.hpp"

namespace kwsep::stream {

// Centered moving average; near the edges the average runs over the part
// of the span that lies inside the trace.
struct SmootherConfig {
  int span_frames = 5;
  void validate() const;
};

std::vector<float> smooth_series(std::span<const float> x, int span);
PosteriorTrace smooth(const PosteriorTrace& trace, const SmootherConfig& cfg);

struct DetectionEvent {
  double time_ms = 0.0;  // smoothed posterior first reaches the threshold
  std::size_t index = 0;
  double score = 0.0;  // smoothed posterior at the crossing
  double threshold = 0.0;
  int output_class = 0;
  // First local maximum of the raw posterior at or after the crossing.
  double local_max_ms = 0.0;
  std::size_t local_max_index = 0;
  double local_max_score = 0.0;
};

// Upward crossings of `threshold` by output `output_class` of the smoothed
// trace. A crossing closer than refractory_ms to the previous event is
// dropped. The trace start counts as below threshold.
std::vector<DetectionEvent> detect(const PosteriorTrace& smoothed, const PosteriorTrace& raw, double threshold,
                                   double refractory_ms, int output_class = 0);

enum class EndpointMethod { kConst, kRegressionThresCrossing, kRegressionLocalMax, kAligned };

const char* to_string(EndpointMethod m);
EndpointMethod endpoint_method_from_string(const std::string& name);

struct EndpointEstimate {
  double start_ms = 0.0;
  double end_ms = 0.0;
  EndpointMethod method = EndpointMethod::kConst;
  DetectionEvent event;
  bool fallback = false;  // produced by the const rule in place of the requested method
  std::string note;
  // Aligned method: peak times of the post_center_start and end_aligned
  // outputs, kept even when the estimate itself fell back.
  std::optional<double> start_peak_ms;
  std::optional<double> end_peak_ms;

  double center_ms() const { return 0.5 * (start_ms + end_ms); }
};

// Keyword center = window center at the raw local-max time.
EndpointEstimate endpoint_const(const DetectionEvent& event, double median_duration_ms, double window_ms);

enum class RegressionReadout { kThresCrossing, kLocalMax };

// Offsets read at the crossing or the local max, relative to the window
// [t - window_ms, t]. Throws if the readout time is not in the trace.
EndpointEstimate endpoint_regression(const DetectionEvent& event, const PosteriorTrace& regression,
                                     RegressionReadout readout, double window_ms);

struct AlignedSettings {
  double window_ms = 1000.0;
  double margin_ms = 50.0;
  double search_ms = 1000.0;
  double min_peak = 0.25;  // smallest smoothed posterior accepted as a peak
  double median_duration_ms = 0.0;  // for the const fallback
};

// Peak times of the smoothed post_center_start and end_aligned outputs
// within search_ms of the event's center-output peak. Without a
// qualifying peak (or with end <= start) the const estimate is returned
// with fallback set.
EndpointEstimate endpoint_aligned(const DetectionEvent& event, const PosteriorTrace& smoothed,
                                  const AlignedSettings& settings);

// Replaces estimates whose duration leaves [0.2, 3] x window by the const
// estimate, flagged as fallback.
EndpointEstimate apply_sanity_band(EndpointEstimate est, double median_duration_ms, double window_ms);

struct EndpointerConfig {
  SmootherConfig smoother;
  double threshold = 0.5;
  double refractory_ms = 750.0;
  std::optional<double> search_ms;         // unset: one window length
  double aligned_min_peak = 0.25;
  std::optional<double> median_duration_ms;  // unset: the model's training corpus median
  std::optional<double> margin_ms;           // unset: the model's training margin

  void validate() const;
};

std::vector<EndpointMethod> supported_methods(const models::KwsModel& model);

struct StreamResult {
  StreamTraces traces;
  PosteriorTrace smoothed;
  std::vector<DetectionEvent> events;
  std::vector<EndpointEstimate> estimates;  // one per (event, method)
};

// Runs the requested methods over one stream. Throws kModelKindMismatch for
// a method the model does not support.
StreamResult run_endpointer(const models::KwsModel& model, const audio::FeatureMatrix& raw,
                            const EndpointerConfig& cfg, std::span<const EndpointMethod> methods);

// Endpoint estimation on precomputed traces (used by run_endpointer and by
// the evaluation harness to sweep thresholds without re-running the model).
StreamResult endpoint_traces(const models::KwsModel& model, StreamTraces traces, const EndpointerConfig& cfg,
                             std::span<const EndpointMethod> methods);

}  // namespace kwsep::stream
