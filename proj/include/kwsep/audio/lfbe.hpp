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

#include <span>
#include <vector>

#include "kwsep/audio/wav.hpp"

namespace kwsep::audio {

struct FeatureConfig {
  double frame_len_ms = 25.0;
  double hop_ms = 10.0;
  int n_mels = 64;
  int fft_size = 512;
  double mel_fmin_hz = 60.0;
  double mel_fmax_hz = 7600.0;
  double log_floor = 1e-10;

  int frame_samples(int sample_rate) const;
  int hop_samples(int sample_rate) const;

  // Throws ValidationError naming the first violated field.
  void validate(int sample_rate) const;
  bool operator==(const FeatureConfig&) const = default;
};

// Time-major feature frames. Frame t starts at origin_ms + t * hop_ms.
struct FeatureMatrix {
  int n_frames = 0;
  int n_dims = 0;
  double hop_ms = 10.0;
  double origin_ms = 0.0;
  std::vector<float> values;  // n_frames * n_dims, row-major

  std::span<const float> frame(int t) const {
    return {values.data() + static_cast<std::size_t>(t) * n_dims, static_cast<std::size_t>(n_dims)};
  }
  std::span<float> frame(int t) {
    return {values.data() + static_cast<std::size_t>(t) * n_dims, static_cast<std::size_t>(n_dims)};
  }
  float at(int t, int d) const { return values[static_cast<std::size_t>(t) * n_dims + d]; }
};

// Number of full frames that fit in `n_samples`; zero if none.
int frame_count(std::size_t n_samples, int frame_samples, int hop_samples);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Center frequency (Hz) of each triangular mel filter.
std::vector<double> mel_center_frequencies(const FeatureConfig& cfg);

// Triangular filter weights, n_mels rows by (fft_size/2 + 1) columns.
std::vector<std::vector<double>> mel_filterbank(const FeatureConfig& cfg, int sample_rate);

// Hann-windowed power spectrum -> mel filterbank -> natural log of
// max(energy, log_floor). Throws if the clip is shorter than one frame.
FeatureMatrix lfbe(const AudioClip& clip, const FeatureConfig& cfg);

// Per-dimension mean and (population) variance.
struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> var;
};

// Streaming accumulation of FeatureStats, accumulated at 64-bit.
class FeatureStatsAccumulator {
 public:
  void add(const FeatureMatrix& m);
  FeatureStats finish() const;

 private:
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
  double count_ = 0;
};

FeatureStats compute_stats(std::span<const FeatureMatrix> corpus);

// out = (in - mean) / sqrt(var). Throws on a zero-variance dimension.
FeatureMatrix normalize(const FeatureMatrix& features, const FeatureStats& stats);

}  // namespace kwsep::audio
