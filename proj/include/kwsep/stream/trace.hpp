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

#include <deque>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "kwsep/audio/lfbe.hpp"
#include "kwsep/models/models.hpp"

namespace kwsep::stream {

double frame_to_ms(long frame, double hop_ms);
// Nearest frame; exact inverse of frame_to_ms on the frame grid.
long ms_to_frame(double ms, double hop_ms);

// Per-output time series on the hop grid. Entry i is stamped with the end
// time of the window that produced it: start_ms + i * hop_ms.
struct PosteriorTrace {
  std::vector<std::string> names;
  double hop_ms = 10.0;
  double window_ms = 1000.0;
  double start_ms = 0.0;
  std::vector<float> values;  // length() rows of names.size() values

  int n_outputs() const { return static_cast<int>(names.size()); }
  std::size_t length() const { return names.empty() ? 0 : values.size() / names.size(); }
  double time_ms(std::size_t i) const { return start_ms + static_cast<double>(i) * hop_ms; }
  float at(std::size_t i, int k) const { return values[i * names.size() + static_cast<std::size_t>(k)]; }
  std::vector<float> series(int k) const;
  // Index whose timestamp is `t_ms`, if it lies on the grid inside the trace.
  std::optional<std::size_t> index_of(double t_ms) const;
};

struct StreamTraces {
  PosteriorTrace posterior;
  std::optional<PosteriorTrace> regression;  // (start_rel, end_rel) when the model has a head
};

std::vector<std::string> output_names(const models::KwsModel& model);

// One inference per hop over raw (unnormalized) features; the model's
// statistics are applied here. Windows are evaluated in batches of
// `batch_windows`. Throws if the stream is shorter than one window.
StreamTraces sliding_window_infer(const models::KwsModel& model, const audio::FeatureMatrix& raw,
                                  int batch_windows = 64);

// Frame-at-a-time inference: each pushed raw frame completes at most one
// window, which is evaluated immediately.
class StreamingInferencer {
 public:
  explicit StreamingInferencer(const models::KwsModel& model, double origin_ms = 0.0);

  // Returns true when the frame completed a window (a new trace entry).
  bool push_frame(std::span<const float> raw_frame);
  const StreamTraces& traces() const { return traces_; }
  long frames_seen() const { return frames_; }

 private:
  const models::KwsModel& model_;
  std::vector<double> inv_std_;
  std::deque<std::vector<float>> window_;
  StreamTraces traces_;
  long frames_ = 0;
};

// CSV with a time_ms column, one column per output, then regression
// columns when present.
void write_trace_csv(std::ostream& os, const StreamTraces& traces);

}  // namespace kwsep::stream
