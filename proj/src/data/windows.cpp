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

#include "kwsep/data/windows.hpp"

#include <cmath>

#include "kwsep/error.hpp"

namespace kwsep::data {

using models::AlignmentClass;

AlignmentAnchor alignment_anchor(AlignmentClass alignment, const Interval& kw, const WindowConfig& window) {
  const double w = window.window_ms();
  switch (alignment) {
    case AlignmentClass::kCenter: return {kw.center_ms(), w / 2};
    case AlignmentClass::kPostCenterStart: return {kw.start_ms, w / 2};
    case AlignmentClass::kEndAligned: return {kw.end_ms, w - window.margin_ms};
    case AlignmentClass::kNegative: break;
  }
  throw Error(ErrorCode::kInvalidArgument, "negative windows have no alignment anchor");
}

RelativeOffsets relative_offsets(const Interval& kw, double window_start_ms, double window_ms) {
  return {(kw.start_ms - window_start_ms) / window_ms, (kw.end_ms - window_start_ms) / window_ms};
}

namespace {

ExampleWindow slice(const FeaturedRecord& record, int first_frame, int n_frames) {
  const auto& f = record.features;
  ExampleWindow ex;
  ex.n_frames = n_frames;
  ex.n_dims = f.n_dims;
  const auto begin = f.values.begin() + static_cast<std::ptrdiff_t>(first_frame) * f.n_dims;
  ex.features.assign(begin, begin + static_cast<std::ptrdiff_t>(n_frames) * f.n_dims);
  ex.source_id = record.id;
  ex.window_start_ms = f.origin_ms + first_frame * f.hop_ms;
  return ex;
}

}  // namespace

ExampleWindow cut_example(const FeaturedRecord& record, AlignmentClass alignment, const WindowConfig& window,
                          Rng& rng) {
  const int w = window.window_frames;
  const int last_start = record.features.n_frames - w;
  if (last_start < 0) {
    throw Error(ErrorCode::kInfeasible, "record '" + record.id + "' is shorter than one window");
  }
  if (std::abs(record.features.hop_ms - window.hop_ms) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "feature hop does not match the window hop");
  }

  if (alignment == AlignmentClass::kNegative) {
    if (record.label != StreamLabel::kNegative) {
      throw Error(ErrorCode::kInvalidArgument, "negative windows must come from negative records");
    }
    ExampleWindow ex = slice(record, static_cast<int>(uniform_int(rng, 0, last_start)), w);
    ex.alignment = alignment;
    return ex;
  }

  if (record.label != StreamLabel::kPositive || record.keyword_intervals.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "aligned windows need a positive record");
  }
  const Interval& kw = record.keyword_intervals.front();
  const auto anchor = alignment_anchor(alignment, kw, window);
  const double exact_start = anchor.keyword_point_ms - anchor.window_offset_ms;
  const double origin = record.features.origin_ms;
  for (int attempt = 0; attempt < window.max_tries; ++attempt) {
    const double jitter = uniform(rng, -window.jitter_ms, window.jitter_ms);
    const auto frame = static_cast<long>(std::lround((exact_start + jitter - origin) / window.hop_ms));
    if (frame < 0 || frame > last_start) continue;
    ExampleWindow ex = slice(record, static_cast<int>(frame), w);
    ex.alignment = alignment;
    ex.jitter_ms = ex.window_start_ms - exact_start;
    ex.offsets = relative_offsets(kw, ex.window_start_ms, window.window_ms());
    ex.keyword = kw;
    return ex;
  }
  throw Error(ErrorCode::kInfeasible, "record '" + record.id + "': window leaves the record after " +
                                          std::to_string(window.max_tries) + " jitter draws");
}

bool alignment_consistent(const ExampleWindow& ex, const WindowConfig& window) {
  if (ex.alignment == AlignmentClass::kNegative) return !ex.offsets.has_value();
  if (!ex.keyword || !ex.offsets) return false;
  const auto anchor = alignment_anchor(ex.alignment, *ex.keyword, window);
  const double reference = ex.window_start_ms + anchor.window_offset_ms;
  return std::abs(anchor.keyword_point_ms - reference) <= window.jitter_ms + 0.5 * window.hop_ms + 1e-9;
}

const char* to_string(SamplerMode mode) {
  switch (mode) {
    case SamplerMode::kDetector: return "detector";
    case SamplerMode::kMultiAligned: return "multi_aligned";
    case SamplerMode::kRegression: return "regression";
  }
  return "unknown";
}

SamplerMode sampler_mode_from_string(const std::string& name) {
  for (auto m : {SamplerMode::kDetector, SamplerMode::kMultiAligned, SamplerMode::kRegression}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown sampler mode '" + name + "'");
}

std::array<double, 4> alignment_distribution(SamplerMode mode) {
  switch (mode) {
    case SamplerMode::kDetector: return {0.5, 0.0, 0.0, 0.5};
    case SamplerMode::kMultiAligned: return {0.25, 0.125, 0.125, 0.5};
    case SamplerMode::kRegression: return {1.0, 0.0, 0.0, 0.0};
  }
  return {};
}

MinibatchSampler::MinibatchSampler(const std::vector<FeaturedRecord>& corpus, SamplerMode mode, WindowConfig window,
                                   std::uint64_t seed)
    : corpus_(corpus), mode_(mode), window_(window), rng_(seed) {
  const auto dist = alignment_distribution(mode);
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    acc += dist[i];
    cdf_[i] = acc;
  }
  cdf_.back() = 1.0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    (corpus[i].label == StreamLabel::kPositive ? positives_ : negatives_).push_back(i);
  }
  if (positives_.empty()) throw Error(ErrorCode::kInvalidArgument, "sampler: corpus has no positive records");
  if (dist[3] > 0 && negatives_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "sampler: corpus has no negative records");
  }
}

AlignmentClass MinibatchSampler::draw_alignment() {
  const double u = uniform01(rng_);
  for (std::size_t i = 0; i < cdf_.size(); ++i) {
    if (u < cdf_[i]) return static_cast<AlignmentClass>(i);
  }
  return AlignmentClass::kNegative;
}

std::vector<ExampleWindow> MinibatchSampler::next(int batch_size) {
  std::vector<ExampleWindow> batch;
  batch.reserve(static_cast<std::size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i) {
    const auto a = draw_alignment();
    const auto& pool = a == AlignmentClass::kNegative ? negatives_ : positives_;
    const auto idx = pool[static_cast<std::size_t>(uniform_int(rng_, 0, static_cast<std::int64_t>(pool.size()) - 1))];
    batch.push_back(cut_example(corpus_[idx], a, window_, rng_));
  }
  return batch;
}

nn::Tensor<float> stack_windows(const std::vector<ExampleWindow>& batch) {
  if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "stack_windows: empty batch");
  const int frames = batch.front().n_frames, dims = batch.front().n_dims;
  nn::Tensor<float> out({static_cast<int>(batch.size()), 1, frames, dims});
  const std::size_t per = static_cast<std::size_t>(frames) * dims;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].features.size() != per) throw Error(ErrorCode::kShapeMismatch, "stack_windows: ragged batch");
    std::copy(batch[i].features.begin(), batch[i].features.end(), out.data() + i * per);
  }
  return out;
}

}  // namespace kwsep::data
