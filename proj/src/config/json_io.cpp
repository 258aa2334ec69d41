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

#include "kwsep/config/json_io.hpp"

namespace kwsep::config {

ObjectReader::ObjectReader(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
  if (!j_.is_object()) {
    throw ValidationError(prefix_.empty() ? "<root>" : prefix_, std::string("expected object, got ") + j_.type_name());
  }
}

const json* ObjectReader::take(const char* key) {
  auto it = j_.find(key);
  if (it == j_.end()) return nullptr;
  seen_.insert(key);
  return &*it;
}

void ObjectReader::finish() const {
  for (auto it = j_.begin(); it != j_.end(); ++it) {
    if (!seen_.count(it.key())) throw ValidationError(path(it.key()), "unknown key");
  }
}

json to_json(const audio::FeatureConfig& c) {
  return {{"frame_len_ms", c.frame_len_ms}, {"hop_ms", c.hop_ms},           {"n_mels", c.n_mels},
          {"fft_size", c.fft_size},         {"mel_fmin_hz", c.mel_fmin_hz}, {"mel_fmax_hz", c.mel_fmax_hz},
          {"log_floor", c.log_floor}};
}

void from_json(const json& j, audio::FeatureConfig& c, const std::string& prefix) {
  ObjectReader r(j, prefix);
  r.read("frame_len_ms", c.frame_len_ms);
  r.read("hop_ms", c.hop_ms);
  r.read("n_mels", c.n_mels);
  r.read("fft_size", c.fft_size);
  r.read("mel_fmin_hz", c.mel_fmin_hz);
  r.read("mel_fmax_hz", c.mel_fmax_hz);
  r.read("log_floor", c.log_floor);
  r.finish();
}

json to_json(const audio::FeatureStats& s) { return {{"mean", s.mean}, {"var", s.var}}; }

void from_json(const json& j, audio::FeatureStats& s, const std::string& prefix) {
  ObjectReader r(j, prefix);
  r.read("mean", s.mean);
  r.read("var", s.var);
  r.finish();
  if (s.mean.size() != s.var.size()) throw ValidationError(prefix + ".var", "length differs from mean");
}

json to_json(const models::DetectorConfig& c) {
  json conv = json::array();
  for (const auto& s : c.conv) {
    conv.push_back({{"channels", s.channels},
                    {"kernel", {s.kernel_h, s.kernel_w}},
                    {"stride", {s.stride_h, s.stride_w}}});
  }
  return {{"input_frames", c.input_frames},
          {"input_dims", c.input_dims},
          {"conv", conv},
          {"pool", {c.pool_h, c.pool_w}},
          {"fc_hidden", c.fc_hidden},
          {"n_outputs", c.n_outputs},
          {"dropout", c.dropout},
          {"bn_momentum", c.bn_momentum},
          {"bn_epsilon", c.bn_epsilon}};
}

namespace {

void read_pair(ObjectReader& r, const char* key, int& a, int& b) {
  std::vector<int> v{a, b};
  r.read(key, v);
  if (v.size() != 2) throw ValidationError(r.path(key), "expected [rows, cols]");
  a = v[0];
  b = v[1];
}

}  // namespace

void from_json(const json& j, models::DetectorConfig& c, const std::string& prefix) {
  ObjectReader r(j, prefix);
  r.read("input_frames", c.input_frames);
  r.read("input_dims", c.input_dims);
  if (const json* conv = r.child("conv")) {
    if (!conv->is_array() || conv->size() != c.conv.size()) {
      throw ValidationError(r.path("conv"), "expected an array of exactly 5 conv stages");
    }
    for (std::size_t i = 0; i < c.conv.size(); ++i) {
      ObjectReader s((*conv)[i], r.path("conv[" + std::to_string(i) + "]"));
      auto& st = c.conv[i];
      s.read("channels", st.channels);
      read_pair(s, "kernel", st.kernel_h, st.kernel_w);
      read_pair(s, "stride", st.stride_h, st.stride_w);
      s.finish();
    }
  }
  read_pair(r, "pool", c.pool_h, c.pool_w);
  std::vector<int> fc(c.fc_hidden.begin(), c.fc_hidden.end());
  r.read("fc_hidden", fc);
  if (fc.size() != c.fc_hidden.size()) {
    throw ValidationError(r.path("fc_hidden"), "expected 2 hidden widths (the third FC layer is the output)");
  }
  std::copy(fc.begin(), fc.end(), c.fc_hidden.begin());
  r.read("n_outputs", c.n_outputs);
  r.read("dropout", c.dropout);
  r.read("bn_momentum", c.bn_momentum);
  r.read("bn_epsilon", c.bn_epsilon);
  r.finish();
}

json to_json(const models::RegressionHeadConfig& c) {
  return {{"channels", c.channels}, {"kernel", {c.kernel_h, c.kernel_w}}, {"tap_conv", c.tap_conv}};
}

void from_json(const json& j, models::RegressionHeadConfig& c, const std::string& prefix) {
  ObjectReader r(j, prefix);
  r.read("channels", c.channels);
  read_pair(r, "kernel", c.kernel_h, c.kernel_w);
  r.read("tap_conv", c.tap_conv);
  r.finish();
}

json to_json(const data::WindowConfig& c) {
  return {{"window_frames", c.window_frames}, {"hop_ms", c.hop_ms},       {"jitter_ms", c.jitter_ms},
          {"margin_ms", c.margin_ms},         {"max_tries", c.max_tries}};
}

void from_json(const json& j, data::WindowConfig& c, const std::string& prefix) {
  ObjectReader r(j, prefix);
  r.read("window_frames", c.window_frames);
  r.read("hop_ms", c.hop_ms);
  r.read("jitter_ms", c.jitter_ms);
  r.read("margin_ms", c.margin_ms);
  r.read("max_tries", c.max_tries);
  r.finish();
}

json to_json(const data::SyntheticKeywordSpec& c) {
  return {{"sample_rate", c.sample_rate},
          {"stream_ms", c.stream_ms},
          {"min_ms", c.min_ms},
          {"max_ms", c.max_ms},
          {"snr_db_min", c.snr_db_min},
          {"snr_db_max", c.snr_db_max},
          {"noise_rms", c.noise_rms},
          {"pitch_jitter", c.pitch_jitter},
          {"rate_jitter", c.rate_jitter},
          {"hard_negative_fraction", c.hard_negative_fraction}};
}

void from_json(const json& j, data::SyntheticKeywordSpec& c, const std::string& prefix) {
  ObjectReader r(j, prefix);
  r.read("sample_rate", c.sample_rate);
  r.read("stream_ms", c.stream_ms);
  r.read("min_ms", c.min_ms);
  r.read("max_ms", c.max_ms);
  r.read("snr_db_min", c.snr_db_min);
  r.read("snr_db_max", c.snr_db_max);
  r.read("noise_rms", c.noise_rms);
  r.read("pitch_jitter", c.pitch_jitter);
  r.read("rate_jitter", c.rate_jitter);
  r.read("hard_negative_fraction", c.hard_negative_fraction);
  r.finish();
}

json to_json(const train::TrainConfig& c) {
  json j{{"mode", train::to_string(c.mode)},
         {"steps", c.steps},
         {"batch_size", c.batch_size},
         {"learning_rate", c.learning_rate},
         {"seed", c.seed},
         {"eval_every", c.eval_every},
         {"eval_examples", c.eval_examples},
         {"multitask_lambda", c.multitask_lambda}};
  j["regression_jitter_ms"] = c.regression_jitter_ms ? json(*c.regression_jitter_ms) : json(nullptr);
  return j;
}

void from_json(const json& j, train::TrainConfig& c, const std::string& prefix) {
  ObjectReader r(j, prefix);
  std::string mode = train::to_string(c.mode);
  r.read("mode", mode);
  c.mode = train::train_mode_from_string(mode);
  r.read("steps", c.steps);
  r.read("batch_size", c.batch_size);
  r.read("learning_rate", c.learning_rate);
  r.read("seed", c.seed);
  r.read("eval_every", c.eval_every);
  r.read("eval_examples", c.eval_examples);
  r.read("multitask_lambda", c.multitask_lambda);
  if (const json* v = r.child("regression_jitter_ms"); v && !v->is_null()) {
    if (!v->is_number()) throw ValidationError(r.path("regression_jitter_ms"), "expected number");
    c.regression_jitter_ms = v->get<double>();
  }
  r.finish();
}

namespace {

void read_optional(ObjectReader& r, const char* key, std::optional<double>& out) {
  const json* v = r.child(key);
  if (v == nullptr || v->is_null()) return;
  if (!v->is_number()) throw ValidationError(r.path(key), std::string("expected number, got ") + v->type_name());
  out = v->get<double>();
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const stream::EndpointerConfig& c) {
  return {{"smoothing_span", c.smoother.span_frames},
          {"threshold", c.threshold},
          {"refractory_ms", c.refractory_ms},
          {"search_ms", optional_json(c.search_ms)},
          {"aligned_min_peak", c.aligned_min_peak},
          {"median_duration_ms", optional_json(c.median_duration_ms)},
          {"margin_ms", optional_json(c.margin_ms)}};
}

void from_json(const json& j, stream::EndpointerConfig& c, const std::string& prefix) {
  ObjectReader r(j, prefix);
  r.read("smoothing_span", c.smoother.span_frames);
  r.read("threshold", c.threshold);
  r.read("refractory_ms", c.refractory_ms);
  read_optional(r, "search_ms", c.search_ms);
  r.read("aligned_min_peak", c.aligned_min_peak);
  read_optional(r, "median_duration_ms", c.median_duration_ms);
  read_optional(r, "margin_ms", c.margin_ms);
  r.finish();
}

json to_json(const eval::EvalConfig& c) {
  return {{"target_far", optional_json(c.target_far)},
          {"long_split", eval::to_string(c.long_split)},
          {"long_threshold_ms", c.long_threshold_ms},
          {"match_window_ms", c.match_window_ms},
          {"methods", c.methods}};
}

void from_json(const json& j, eval::EvalConfig& c, const std::string& prefix) {
  ObjectReader r(j, prefix);
  read_optional(r, "target_far", c.target_far);
  std::string split = eval::to_string(c.long_split);
  r.read("long_split", split);
  c.long_split = eval::long_split_from_string(split);
  r.read("long_threshold_ms", c.long_threshold_ms);
  r.read("match_window_ms", c.match_window_ms);
  r.read("methods", c.methods);
  r.finish();
}

}  // namespace kwsep::config
