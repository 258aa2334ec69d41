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

#include "kwsep/stream/trace.hpp"

#include <cmath>
#include <iomanip>

#include "kwsep/error.hpp"

namespace kwsep::stream {

double frame_to_ms(long frame, double hop_ms) { return static_cast<double>(frame) * hop_ms; }

long ms_to_frame(double ms, double hop_ms) { return std::lround(ms / hop_ms); }

std::vector<float> PosteriorTrace::series(int k) const {
  std::vector<float> s(length());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = at(i, k);
  return s;
}

std::optional<std::size_t> PosteriorTrace::index_of(double t_ms) const {
  const double pos = (t_ms - start_ms) / hop_ms;
  const double r = std::round(pos);
  if (std::abs(pos - r) > 1e-6 || r < 0 || r >= static_cast<double>(length())) return std::nullopt;
  return static_cast<std::size_t>(r);
}

std::vector<std::string> output_names(const models::KwsModel& model) {
  if (model.n_outputs() == models::kNumAlignmentClasses) {
    std::vector<std::string> names;
    for (int c = 0; c < models::kNumAlignmentClasses; ++c) {
      names.emplace_back(models::to_string(static_cast<models::AlignmentClass>(c)));
    }
    return names;
  }
  return {"keyword", "non_keyword"};
}

namespace {

PosteriorTrace empty_trace(std::vector<std::string> names, const models::KwsModel& model, double start_ms) {
  PosteriorTrace t;
  t.names = std::move(names);
  t.hop_ms = model.features.hop_ms;
  t.window_ms = model.window_ms();
  t.start_ms = start_ms;
  return t;
}

std::vector<double> inverse_std(const audio::FeatureStats& stats) {
  std::vector<double> inv(stats.var.size());
  for (std::size_t d = 0; d < inv.size(); ++d) {
    if (!(stats.var[d] > 0)) throw Error(ErrorCode::kInvalidArgument, "model statistics have zero variance");
    inv[d] = 1.0 / std::sqrt(stats.var[d]);
  }
  return inv;
}

float normalize_value(float raw, const audio::FeatureStats& stats, const std::vector<double>& inv, int d) {
  return static_cast<float>((raw - stats.mean[d]) * inv[d]);
}

void check_dims(const models::KwsModel& model, int dims) {
  if (dims != model.config.input_dims || static_cast<std::size_t>(dims) != model.stats.mean.size()) {
    throw Error(ErrorCode::kShapeMismatch, "feature dimension " + std::to_string(dims) +
                                               " does not match the model input (" +
                                               std::to_string(model.config.input_dims) + ")");
  }
}

}  // namespace

StreamTraces sliding_window_infer(const models::KwsModel& model, const audio::FeatureMatrix& raw, int batch_windows) {
  check_dims(model, raw.n_dims);
  const int w = model.window_frames();
  if (raw.n_frames < w) {
    throw Error(ErrorCode::kInvalidArgument, "stream of " + std::to_string(raw.n_frames) +
                                                 " frames is shorter than the " + std::to_string(w) +
                                                 "-frame window");
  }
  if (batch_windows < 1) throw Error(ErrorCode::kInvalidArgument, "batch_windows must be >= 1");
  const auto norm = audio::normalize(raw, model.stats);
  const int n = raw.n_frames - w + 1;
  const int d = raw.n_dims;
  const bool head = model.net.has_head();
  const double t0 = raw.origin_ms + frame_to_ms(w, raw.hop_ms);

  StreamTraces out;
  out.posterior = empty_trace(output_names(model), model, t0);
  out.posterior.values.reserve(static_cast<std::size_t>(n) * model.n_outputs());
  if (head) {
    out.regression = empty_trace({"start_rel", "end_rel"}, model, t0);
    out.regression->values.reserve(static_cast<std::size_t>(n) * 2);
  }
  const std::size_t per = static_cast<std::size_t>(w) * d;
  for (int lo = 0; lo < n; lo += batch_windows) {
    const int b = std::min(batch_windows, n - lo);
    nn::Tensor<float> x({b, 1, w, d});
    for (int i = 0; i < b; ++i) {
      const float* src = norm.values.data() + static_cast<std::size_t>(lo + i) * d;
      std::copy(src, src + per, x.data() + static_cast<std::size_t>(i) * per);
    }
    nn::Tensor<float> probs, offsets;
    model.net.infer_both(x, probs, head ? &offsets : nullptr);
    out.posterior.values.insert(out.posterior.values.end(), probs.data(), probs.data() + probs.size());
    if (head) out.regression->values.insert(out.regression->values.end(), offsets.data(), offsets.data() + offsets.size());
  }
  return out;
}

StreamingInferencer::StreamingInferencer(const models::KwsModel& model, double origin_ms)
    : model_(model), inv_std_(inverse_std(model.stats)) {
  check_dims(model, model.config.input_dims);
  const double t0 = origin_ms + frame_to_ms(model.window_frames(), model.features.hop_ms);
  traces_.posterior = empty_trace(output_names(model), model, t0);
  if (model.net.has_head()) traces_.regression = empty_trace({"start_rel", "end_rel"}, model, t0);
}

bool StreamingInferencer::push_frame(std::span<const float> raw_frame) {
  const int d = model_.config.input_dims;
  if (raw_frame.size() != static_cast<std::size_t>(d)) {
    throw Error(ErrorCode::kShapeMismatch, "frame has " + std::to_string(raw_frame.size()) + " values, expected " +
                                               std::to_string(d));
  }
  std::vector<float> f(raw_frame.size());
  for (int k = 0; k < d; ++k) f[k] = normalize_value(raw_frame[k], model_.stats, inv_std_, k);
  window_.push_back(std::move(f));
  ++frames_;
  const int w = model_.window_frames();
  if (static_cast<int>(window_.size()) > w) window_.pop_front();
  if (static_cast<int>(window_.size()) < w) return false;

  nn::Tensor<float> x({1, 1, w, d});
  for (int t = 0; t < w; ++t) std::copy(window_[t].begin(), window_[t].end(), x.data() + static_cast<std::size_t>(t) * d);
  nn::Tensor<float> probs, offsets;
  const bool head = traces_.regression.has_value();
  model_.net.infer_both(x, probs, head ? &offsets : nullptr);
  traces_.posterior.values.insert(traces_.posterior.values.end(), probs.data(), probs.data() + probs.size());
  if (head) traces_.regression->values.insert(traces_.regression->values.end(), offsets.data(), offsets.data() + 2);
  return true;
}

void write_trace_csv(std::ostream& os, const StreamTraces& traces) {
  const auto& p = traces.posterior;
  os << "time_ms";
  for (const auto& n : p.names) os << ',' << n;
  if (traces.regression) {
    for (const auto& n : traces.regression->names) os << ',' << n;
  }
  os << '\n' << std::setprecision(9);
  for (std::size_t i = 0; i < p.length(); ++i) {
    os << p.time_ms(i);
    for (int k = 0; k < p.n_outputs(); ++k) os << ',' << p.at(i, k);
    if (traces.regression) {
      for (int k = 0; k < traces.regression->n_outputs(); ++k) os << ',' << traces.regression->at(i, k);
    }
    os << '\n';
  }
}

}  // namespace kwsep::stream
