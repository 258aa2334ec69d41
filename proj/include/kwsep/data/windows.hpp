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

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "kwsep/audio/lfbe.hpp"
#include "kwsep/data/synth.hpp"
#include "kwsep/models/models.hpp"
#include "kwsep/rng.hpp"

namespace kwsep::data {

// A stream after feature extraction and normalization.
struct FeaturedRecord {
  std::string id;
  StreamLabel label = StreamLabel::kNegative;
  std::vector<Interval> keyword_intervals;
  audio::FeatureMatrix features;
};

// Window-relative keyword position: 0 is the window start, 1 its end.
// Values may fall outside [0, 1] when the keyword overhangs the window.
struct RelativeOffsets {
  double start_rel = 0.0;
  double end_rel = 0.0;
};

struct ExampleWindow {
  std::vector<float> features;  // window_frames * n_dims, time-major
  int n_frames = 0;
  int n_dims = 0;
  models::AlignmentClass alignment = models::AlignmentClass::kNegative;
  std::optional<RelativeOffsets> offsets;  // absent for negatives
  std::string source_id;
  double window_start_ms = 0.0;
  double jitter_ms = 0.0;  // realized displacement from the exact alignment point
  std::optional<Interval> keyword;
};

// Time (ms) that the alignment rule pins to a reference point of the
// window, and that reference point's offset from the window start.
struct AlignmentAnchor {
  double keyword_point_ms;
  double window_offset_ms;
};
AlignmentAnchor alignment_anchor(models::AlignmentClass alignment, const Interval& kw, const WindowConfig& window);

RelativeOffsets relative_offsets(const Interval& kw, double window_start_ms, double window_ms);

// Cuts one window. For keyword alignments the window is placed by the
// alignment rule plus uniform jitter in [-jitter_ms, jitter_ms], snapped to
// the frame grid; jitter is redrawn up to window.max_tries times when the
// window would leave the record. Negative windows start at a uniformly drawn
// frame of a negative record.
ExampleWindow cut_example(const FeaturedRecord& record, models::AlignmentClass alignment, const WindowConfig& window,
                          Rng& rng);

// Checks the alignment-consistency invariant of a cut window: the pinned
// keyword point lies within jitter_ms + hop/2 of the window reference point.
bool alignment_consistent(const ExampleWindow& ex, const WindowConfig& window);

enum class SamplerMode { kDetector, kMultiAligned, kRegression };

const char* to_string(SamplerMode mode);
SamplerMode sampler_mode_from_string(const std::string& name);

// Alignment class probabilities used by each sampler mode, indexed by
// AlignmentClass.
std::array<double, 4> alignment_distribution(SamplerMode mode);

// Draws alignments from the mode's die and cuts windows on the fly from a
// fixed pool of positive and negative records. Deterministic in its seed.
class MinibatchSampler {
 public:
  MinibatchSampler(const std::vector<FeaturedRecord>& corpus, SamplerMode mode, WindowConfig window,
                   std::uint64_t seed);

  models::AlignmentClass draw_alignment();
  std::vector<ExampleWindow> next(int batch_size);

  SamplerMode mode() const { return mode_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

 private:
  const std::vector<FeaturedRecord>& corpus_;
  SamplerMode mode_;
  WindowConfig window_;
  std::array<double, 4> cdf_{};
  std::vector<std::size_t> positives_;
  std::vector<std::size_t> negatives_;
  Rng rng_;
};

// Packs windows into a [N, 1, frames, dims] batch.
nn::Tensor<float> stack_windows(const std::vector<ExampleWindow>& batch);

}  // namespace kwsep::data
