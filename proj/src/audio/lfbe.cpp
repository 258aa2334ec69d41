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

#include "kwsep/audio/lfbe.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "kwsep/error.hpp"

namespace kwsep::audio {
namespace {

// FFTW's planner is not thread-safe; execution with new-array calls is.
std::mutex g_planner_mutex;

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(static_cast<std::size_t>(n));
    out_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    std::lock_guard lock(g_planner_mutex);
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(g_planner_mutex);
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }

  // Power spectrum |X[k]|^2 for k in [0, n/2].
  void power(std::vector<double>& out) {
    fftw_execute(plan_);
    out.resize(static_cast<std::size_t>(n_ / 2 + 1));
    for (int k = 0; k <= n_ / 2; ++k) out[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
  }

 private:
  int n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

int FeatureConfig::frame_samples(int sample_rate) const {
  return static_cast<int>(std::lround(frame_len_ms * sample_rate / 1000.0));
}

int FeatureConfig::hop_samples(int sample_rate) const {
  return static_cast<int>(std::lround(hop_ms * sample_rate / 1000.0));
}

void FeatureConfig::validate(int sample_rate) const {
  if (sample_rate <= 0) throw ValidationError("sample_rate", "must be > 0");
  if (!(frame_len_ms > 0)) throw ValidationError("features.frame_len_ms", "must be > 0");
  if (!(hop_ms > 0)) throw ValidationError("features.hop_ms", "must be > 0");
  if (n_mels <= 0) throw ValidationError("features.n_mels", "must be > 0");
  if (!is_power_of_two(fft_size)) throw ValidationError("features.fft_size", "must be a power of two");
  if (frame_samples(sample_rate) > fft_size) {
    throw ValidationError("features.fft_size", "must be >= frame length in samples");
  }
  if (hop_samples(sample_rate) <= 0) throw ValidationError("features.hop_ms", "hop rounds to zero samples");
  if (!(mel_fmin_hz >= 0 && mel_fmin_hz < mel_fmax_hz && mel_fmax_hz <= sample_rate / 2.0)) {
    throw ValidationError("features.mel_fmax_hz", "require 0 <= mel_fmin_hz < mel_fmax_hz <= sample_rate/2");
  }
  if (!(log_floor > 0)) throw ValidationError("features.log_floor", "must be > 0");
}

int frame_count(std::size_t n_samples, int frame_samples, int hop_samples) {
  if (n_samples < static_cast<std::size_t>(frame_samples)) return 0;
  return static_cast<int>((n_samples - frame_samples) / hop_samples) + 1;
}

double hz_to_mel(double hz) { return 1127.0 * std::log1p(hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * std::expm1(mel / 1127.0); }

std::vector<double> mel_center_frequencies(const FeatureConfig& cfg) {
  const double lo = hz_to_mel(cfg.mel_fmin_hz);
  const double hi = hz_to_mel(cfg.mel_fmax_hz);
  const double step = (hi - lo) / (cfg.n_mels + 1);
  std::vector<double> centers(cfg.n_mels);
  for (int m = 0; m < cfg.n_mels; ++m) centers[m] = mel_to_hz(lo + (m + 1) * step);
  return centers;
}

std::vector<std::vector<double>> mel_filterbank(const FeatureConfig& cfg, int sample_rate) {
  const int n_bins = cfg.fft_size / 2 + 1;
  const double lo = hz_to_mel(cfg.mel_fmin_hz);
  const double hi = hz_to_mel(cfg.mel_fmax_hz);
  const double step = (hi - lo) / (cfg.n_mels + 1);
  std::vector<std::vector<double>> bank(cfg.n_mels, std::vector<double>(n_bins, 0.0));
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double left = lo + m * step;
    const double center = left + step;
    const double right = center + step;
    for (int k = 0; k < n_bins; ++k) {
      const double mel = hz_to_mel(static_cast<double>(k) * sample_rate / cfg.fft_size);
      if (mel > left && mel < right) {
        bank[m][k] = mel <= center ? (mel - left) / step : (right - mel) / step;
      }
    }
  }
  return bank;
}

FeatureMatrix lfbe(const AudioClip& clip, const FeatureConfig& cfg) {
  cfg.validate(clip.sample_rate);
  const int frame = cfg.frame_samples(clip.sample_rate);
  const int hop = cfg.hop_samples(clip.sample_rate);
  const int n_frames = frame_count(clip.samples.size(), frame, hop);
  if (n_frames == 0) {
    throw Error(ErrorCode::kInvalidArgument, "clip shorter than one frame (" +
                                                 std::to_string(clip.samples.size()) + " samples)");
  }

  std::vector<double> window(frame);
  for (int n = 0; n < frame; ++n) {
    window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / (frame - 1));
  }
  const auto bank = mel_filterbank(cfg, clip.sample_rate);

  // Each filter only touches a contiguous run of bins.
  std::vector<std::pair<int, int>> support(cfg.n_mels, {0, -1});
  for (int m = 0; m < cfg.n_mels; ++m) {
    const auto& w = bank[m];
    auto first = std::find_if(w.begin(), w.end(), [](double x) { return x > 0; });
    auto last = std::find_if(w.rbegin(), w.rend(), [](double x) { return x > 0; });
    if (first != w.end()) {
      support[m] = {static_cast<int>(first - w.begin()), static_cast<int>(w.rend() - last) - 1};
    }
  }

  FeatureMatrix out;
  out.n_frames = n_frames;
  out.n_dims = cfg.n_mels;
  out.hop_ms = cfg.hop_ms;
  out.origin_ms = 0.0;
  out.values.resize(static_cast<std::size_t>(n_frames) * cfg.n_mels);

  RealFft fft(cfg.fft_size);
  std::vector<double> power;
  const double floor_log = std::log(cfg.log_floor);
  for (int t = 0; t < n_frames; ++t) {
    double* buf = fft.input();
    const float* src = clip.samples.data() + static_cast<std::size_t>(t) * hop;
    for (int n = 0; n < frame; ++n) buf[n] = src[n] * window[n];
    std::fill(buf + frame, buf + cfg.fft_size, 0.0);
    fft.power(power);
    auto row = out.frame(t);
    for (int m = 0; m < cfg.n_mels; ++m) {
      double energy = 0.0;
      for (int k = support[m].first; k <= support[m].second; ++k) energy += bank[m][k] * power[k];
      row[m] = static_cast<float>(energy > cfg.log_floor ? std::log(energy) : floor_log);
    }
  }
  return out;
}

void FeatureStatsAccumulator::add(const FeatureMatrix& m) {
  if (sum_.empty()) {
    sum_.assign(m.n_dims, 0.0);
    sum_sq_.assign(m.n_dims, 0.0);
  }
  if (static_cast<std::size_t>(m.n_dims) != sum_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "compute_stats: mixed dimensions");
  }
  for (int t = 0; t < m.n_frames; ++t) {
    const auto row = m.frame(t);
    for (int d = 0; d < m.n_dims; ++d) {
      sum_[d] += row[d];
      sum_sq_[d] += static_cast<double>(row[d]) * row[d];
    }
  }
  count_ += m.n_frames;
}

FeatureStats FeatureStatsAccumulator::finish() const {
  if (count_ == 0) throw Error(ErrorCode::kInvalidArgument, "compute_stats: no frames");
  const std::size_t dims = sum_.size();
  FeatureStats stats{std::vector<double>(dims), std::vector<double>(dims)};
  for (std::size_t d = 0; d < dims; ++d) {
    stats.mean[d] = sum_[d] / count_;
    stats.var[d] = std::max(0.0, sum_sq_[d] / count_ - stats.mean[d] * stats.mean[d]);
  }
  return stats;
}

FeatureStats compute_stats(std::span<const FeatureMatrix> corpus) {
  FeatureStatsAccumulator acc;
  for (const auto& m : corpus) acc.add(m);
  return acc.finish();
}

FeatureMatrix normalize(const FeatureMatrix& features, const FeatureStats& stats) {
  if (stats.mean.size() != static_cast<std::size_t>(features.n_dims) ||
      stats.var.size() != stats.mean.size()) {
    throw Error(ErrorCode::kShapeMismatch, "normalize: stats dimension mismatch");
  }
  std::vector<double> inv_std(features.n_dims);
  for (int d = 0; d < features.n_dims; ++d) {
    if (!(stats.var[d] > 0)) {
      throw Error(ErrorCode::kInvalidArgument, "normalize: zero variance in dim " + std::to_string(d));
    }
    inv_std[d] = 1.0 / std::sqrt(stats.var[d]);
  }
  FeatureMatrix out = features;
  for (int t = 0; t < out.n_frames; ++t) {
    auto row = out.frame(t);
    for (int d = 0; d < out.n_dims; ++d) {
      row[d] = static_cast<float>((row[d] - stats.mean[d]) * inv_std[d]);
    }
  }
  return out;
}

}  // namespace kwsep::audio
