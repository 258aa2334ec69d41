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

#include <cstdint>
#include <string>
#include <vector>

#include "kwsep/audio/wav.hpp"

namespace kwsep::data {

// Placement of training windows relative to a keyword. Shared by the
// synthesizer (which only places keywords where every alignment fits) and
// the example cutter.
struct WindowConfig {
  int window_frames = 100;
  double hop_ms = 10.0;
  double jitter_ms = 50.0;
  double margin_ms = 50.0;  // end-aligned: keyword end sits this far before the window end
  int max_tries = 32;       // jitter resampling attempts before giving up

  double window_ms() const { return window_frames * hop_ms; }
  void validate() const;
};

// A synthetic keyword is three formant-like tone segments in a fixed order
// over background noise; per-utterance perturbations vary pitch and rate.
struct SyntheticKeywordSpec {
  int sample_rate = 16000;
  double stream_ms = 2000.0;
  double min_ms = 400.0;
  double max_ms = 900.0;
  double snr_db_min = 5.0;
  double snr_db_max = 20.0;
  double noise_rms = 0.02;
  double pitch_jitter = 0.08;            // relative, uniform in [-x, x]
  double rate_jitter = 0.2;              // relative segment-length perturbation
  double hard_negative_fraction = 0.5;   // negatives holding a shuffled-segment distractor

  void validate(const WindowConfig& window) const;
};

struct Interval {
  double start_ms = 0.0;
  double end_ms = 0.0;

  double center_ms() const { return 0.5 * (start_ms + end_ms); }
  double duration_ms() const { return end_ms - start_ms; }
  bool operator==(const Interval&) const = default;
};

enum class StreamLabel { kPositive, kNegative };

const char* to_string(StreamLabel label);
StreamLabel stream_label_from_string(const std::string& name);

struct StreamRecord {
  std::string id;
  audio::AudioClip audio;
  std::vector<Interval> keyword_intervals;  // exact ground truth, ms
  StreamLabel label = StreamLabel::kNegative;
};

// Range of keyword start times (ms) for which every alignment of a
// `duration_ms` keyword fits inside a `spec.stream_ms` stream. Returns
// {lo, hi} with lo > hi when infeasible.
std::pair<double, double> feasible_start_range(const SyntheticKeywordSpec& spec, const WindowConfig& window,
                                               double duration_ms);

// Deterministic in (spec, window, seed, positive). Positives embed one
// keyword at a uniformly drawn feasible position; negatives hold noise and,
// with probability hard_negative_fraction, a shuffled-segment distractor.
// Throws kInfeasible when a keyword cannot be placed.
StreamRecord synth_stream(const SyntheticKeywordSpec& spec, const WindowConfig& window, std::uint64_t seed,
                          bool positive, std::string id = {});

// Keyword waveform alone (no noise, unit RMS), exposed for tests.
std::vector<float> synth_keyword(const SyntheticKeywordSpec& spec, std::uint64_t seed, double duration_ms,
                                 bool shuffled);

}  // namespace kwsep::data
