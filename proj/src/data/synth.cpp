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

#include "kwsep/data/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "kwsep/error.hpp"
#include "kwsep/rng.hpp"

namespace kwsep::data {
namespace {

struct Segment {
  std::array<double, 3> formants_hz;
  std::array<double, 3> gains;
  double proportion;
};

// Three vowel-like segments; the keyword is their fixed order 0-1-2.
constexpr std::array<Segment, 3> kSegments{{
    {{700.0, 1200.0, 2500.0}, {1.0, 0.6, 0.3}, 0.3},
    {{300.0, 2200.0, 3000.0}, {1.0, 0.5, 0.35}, 0.4},
    {{550.0, 1600.0, 3600.0}, {1.0, 0.7, 0.25}, 0.3},
}};

constexpr std::array<std::array<int, 3>, 5> kShuffles{{
    {0, 2, 1},
    {1, 0, 2},
    {1, 2, 0},
    {2, 0, 1},
    {2, 1, 0},
}};

constexpr double kSegmentRampMs = 8.0;

}  // namespace

const char* to_string(StreamLabel label) { return label == StreamLabel::kPositive ? "positive" : "negative"; }

StreamLabel stream_label_from_string(const std::string& name) {
  if (name == "positive") return StreamLabel::kPositive;
  if (name == "negative") return StreamLabel::kNegative;
  throw Error(ErrorCode::kInvalidArgument, "unknown stream label '" + name + "'");
}

void WindowConfig::validate() const {
  if (window_frames <= 0) throw ValidationError("window.window_frames", "must be > 0");
  if (!(hop_ms > 0)) throw ValidationError("window.hop_ms", "must be > 0");
  if (!(jitter_ms >= 0)) throw ValidationError("window.jitter_ms", "must be >= 0");
  if (!(margin_ms >= 0)) throw ValidationError("window.margin_ms", "must be >= 0");
  if (max_tries < 1) throw ValidationError("window.max_tries", "must be >= 1");
}

void SyntheticKeywordSpec::validate(const WindowConfig& window) const {
  if (sample_rate <= 0) throw ValidationError("synth.sample_rate", "must be > 0");
  if (!(min_ms >= 200.0)) throw ValidationError("synth.min_ms", "must be >= 200");
  if (!(max_ms >= min_ms)) throw ValidationError("synth.max_ms", "must be >= min_ms");
  if (max_ms > stream_ms) throw ValidationError("synth.max_ms", "must not exceed stream_ms");
  if (!(stream_ms >= window.window_ms())) throw ValidationError("synth.stream_ms", "must be >= window length");
  if (!(snr_db_max >= snr_db_min)) throw ValidationError("synth.snr_db_max", "must be >= snr_db_min");
  if (!(noise_rms > 0)) throw ValidationError("synth.noise_rms", "must be > 0");
  if (!(pitch_jitter >= 0 && pitch_jitter < 0.5)) throw ValidationError("synth.pitch_jitter", "must be in [0, 0.5)");
  if (!(rate_jitter >= 0 && rate_jitter < 1.0)) throw ValidationError("synth.rate_jitter", "must be in [0, 1)");
  if (!(hard_negative_fraction >= 0 && hard_negative_fraction <= 1)) {
    throw ValidationError("synth.hard_negative_fraction", "must be in [0, 1]");
  }
}

std::pair<double, double> feasible_start_range(const SyntheticKeywordSpec& spec, const WindowConfig& window,
                                               double d) {
  // Features stop short of the clip end by the final partial frame; two hops
  // cover that, and half a hop absorbs snapping windows to the frame grid.
  const double slack = 0.5 * window.hop_ms;
  const double span = spec.stream_ms - 2.0 * window.hop_ms;
  const double w = window.window_ms();
  const double j = window.jitter_ms + slack;
  const double m = window.margin_ms;
  // center-aligned: [c - w/2 + jit, c + w/2 + jit]
  double lo = w / 2 + j - d / 2;
  double hi = span - w / 2 - j - d / 2;
  // post-center start: [s - w/2 + jit, s + w/2 + jit]
  lo = std::max(lo, w / 2 + j);
  hi = std::min(hi, span - w / 2 - j);
  // end-aligned: window end = s + d + m + jit
  lo = std::max(lo, w + j - d - m);
  hi = std::min(hi, span - j - d - m);
  return {lo, hi};
}

std::vector<float> synth_keyword(const SyntheticKeywordSpec& spec, std::uint64_t seed, double duration_ms,
                                 bool shuffled) {
  Rng rng(seed);
  std::array<int, 3> order{0, 1, 2};
  if (shuffled) order = kShuffles[static_cast<std::size_t>(uniform_int(rng, 0, kShuffles.size() - 1))];

  const double pitch = 1.0 + spec.pitch_jitter * uniform(rng, -1.0, 1.0);
  const double f0 = uniform(rng, 100.0, 180.0);
  std::array<double, 3> props{};
  double total = 0.0;
  for (int k = 0; k < 3; ++k) {
    props[k] = kSegments[k].proportion * (1.0 + spec.rate_jitter * uniform(rng, -1.0, 1.0));
    total += props[k];
  }

  const double sr = spec.sample_rate;
  const auto n = static_cast<std::size_t>(std::lround(duration_ms * sr / 1000.0));
  std::vector<float> out(n, 0.0f);
  const auto ramp = static_cast<double>(kSegmentRampMs * sr / 1000.0);

  std::size_t pos = 0;
  double acc = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Segment& seg = kSegments[order[i]];
    acc += props[order[i]] / total;
    const std::size_t end = i == 2 ? n : static_cast<std::size_t>(std::lround(acc * n));
    const double len = static_cast<double>(end - pos);
    std::array<double, 3> phase{};
    for (auto& p : phase) p = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    for (std::size_t s = pos; s < end; ++s) {
      const double t = static_cast<double>(s - pos);
      const double r = std::min({1.0, (t + 0.5) / ramp, (len - t - 0.5) / ramp});
      const double env = 0.5 - 0.5 * std::cos(std::numbers::pi * std::max(0.0, r));
      const double am = 1.0 + 0.4 * std::sin(2.0 * std::numbers::pi * f0 * s / sr);
      double v = 0.0;
      for (int k = 0; k < 3; ++k) {
        v += seg.gains[k] * std::sin(2.0 * std::numbers::pi * seg.formants_hz[k] * pitch * t / sr + phase[k]);
      }
      out[s] = static_cast<float>(env * am * v);
    }
    pos = end;
  }

  double energy = 0.0;
  for (float v : out) energy += static_cast<double>(v) * v;
  const double rms = std::sqrt(energy / std::max<std::size_t>(n, 1));
  if (rms > 0) {
    for (auto& v : out) v = static_cast<float>(v / rms);
  }
  return out;
}

StreamRecord synth_stream(const SyntheticKeywordSpec& spec, const WindowConfig& window, std::uint64_t seed,
                          bool positive, std::string id) {
  spec.validate(window);
  Rng rng(seed);
  StreamRecord rec;
  rec.id = std::move(id);
  rec.label = positive ? StreamLabel::kPositive : StreamLabel::kNegative;
  rec.audio.sample_rate = spec.sample_rate;
  const double sr = spec.sample_rate;
  const auto n = static_cast<std::size_t>(std::lround(spec.stream_ms * sr / 1000.0));
  rec.audio.samples.resize(n);
  for (auto& s : rec.audio.samples) s = static_cast<float>(spec.noise_rms * normal(rng));

  const double duration = uniform(rng, spec.min_ms, spec.max_ms);
  const double snr_db = uniform(rng, spec.snr_db_min, spec.snr_db_max);
  const std::uint64_t kw_seed = rng();
  bool place = positive;
  bool shuffled = false;
  double start_ms = 0.0;
  if (positive) {
    const auto [lo, hi] = feasible_start_range(spec, window, duration);
    if (lo > hi) {
      throw Error(ErrorCode::kInfeasible, "cannot place a " + std::to_string(duration) + " ms keyword in a " +
                                              std::to_string(spec.stream_ms) + " ms stream");
    }
    start_ms = uniform(rng, lo, hi);
  } else if (uniform01(rng) < spec.hard_negative_fraction) {
    place = true;
    shuffled = true;
    start_ms = uniform(rng, 0.0, spec.stream_ms - duration);
  }

  if (place) {
    const auto kw = synth_keyword(spec, kw_seed, duration, shuffled);
    const auto first = static_cast<std::size_t>(std::lround(start_ms * sr / 1000.0));
    if (first + kw.size() > n) throw Error(ErrorCode::kInfeasible, "keyword overruns the stream");
    const double gain = spec.noise_rms * std::pow(10.0, snr_db / 20.0);
    for (std::size_t i = 0; i < kw.size(); ++i) rec.audio.samples[first + i] += static_cast<float>(gain * kw[i]);
    if (positive) {
      rec.keyword_intervals.push_back(
          {1000.0 * static_cast<double>(first) / sr, 1000.0 * static_cast<double>(first + kw.size()) / sr});
    }
  }
  for (auto& s : rec.audio.samples) s = std::clamp(s, -1.0f, 1.0f);
  return rec;
}

}  // namespace kwsep::data
