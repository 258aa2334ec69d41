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

#include "kwsep/models/models.hpp"

#include <algorithm>

#include "kwsep/config/json_io.hpp"
#include "kwsep/error.hpp"
#include "kwsep/nn/checkpoint.hpp"

namespace kwsep::models {

using nn::LayerSpec;

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kDetector: return "detector";
    case ModelKind::kMultiAligned: return "multi_aligned";
    case ModelKind::kRegression: return "regression";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  for (auto k : {ModelKind::kDetector, ModelKind::kMultiAligned, ModelKind::kRegression}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown model kind '" + name + "'");
}

const char* to_string(AlignmentClass c) {
  switch (c) {
    case AlignmentClass::kCenter: return "center";
    case AlignmentClass::kPostCenterStart: return "post_center_start";
    case AlignmentClass::kEndAligned: return "end_aligned";
    case AlignmentClass::kNegative: return "negative";
  }
  return "unknown";
}

AlignmentClass alignment_from_string(const std::string& name) {
  for (auto c : {AlignmentClass::kCenter, AlignmentClass::kPostCenterStart, AlignmentClass::kEndAligned,
                 AlignmentClass::kNegative}) {
    if (name == to_string(c)) return c;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown alignment '" + name + "'");
}

int class_label(AlignmentClass c, int n_outputs) {
  if (n_outputs == kNumAlignmentClasses) return static_cast<int>(c);
  if (n_outputs == 2) {
    if (c == AlignmentClass::kCenter) return kDetectorKeyword;
    if (c == AlignmentClass::kNegative) return kDetectorNonKeyword;
    throw Error(ErrorCode::kInvalidArgument,
                std::string("2-class detector has no label for alignment ") + to_string(c));
  }
  throw Error(ErrorCode::kInvalidArgument, "unsupported output count " + std::to_string(n_outputs));
}

void DetectorConfig::validate() const {
  if (input_frames <= 0) throw ValidationError("detector.input_frames", "must be > 0");
  if (input_dims <= 0) throw ValidationError("detector.input_dims", "must be > 0");
  for (std::size_t i = 0; i < conv.size(); ++i) {
    const auto& c = conv[i];
    const std::string key = "detector.conv[" + std::to_string(i) + "]";
    if (c.channels <= 0) throw ValidationError(key + ".channels", "must be > 0");
    if (c.kernel_h <= 0 || c.kernel_w <= 0) throw ValidationError(key + ".kernel", "must be > 0");
    if (c.stride_h < 1 || c.stride_w < 1) throw ValidationError(key + ".stride", "must be >= 1");
  }
  if (conv[1].stride_h != 3) throw ValidationError("detector.conv[1].stride", "second conv layer must stride 3 in time");
  if (pool_h <= 0 || pool_w <= 0) throw ValidationError("detector.pool", "must be > 0");
  for (int w : fc_hidden) {
    if (w <= 0) throw ValidationError("detector.fc_hidden", "widths must be > 0");
  }
  if (n_outputs != 2 && n_outputs != kNumAlignmentClasses) {
    throw ValidationError("detector.n_outputs", "must be 2 or 4");
  }
  if (!(dropout >= 0 && dropout < 1)) throw ValidationError("detector.dropout", "must be in [0, 1)");
  if (!(bn_momentum >= 0 && bn_momentum < 1)) throw ValidationError("detector.bn_momentum", "must be in [0, 1)");
  if (!(bn_epsilon > 0)) throw ValidationError("detector.bn_epsilon", "must be > 0");
}

std::vector<LayerSpec> detector_layer_specs(const DetectorConfig& cfg) {
  std::vector<LayerSpec> specs;
  for (std::size_t i = 0; i < cfg.conv.size(); ++i) {
    const auto& c = cfg.conv[i];
    const std::string id = std::to_string(i + 1);
    specs.push_back(LayerSpec::conv2d("conv" + id, c.channels, c.kernel_h, c.kernel_w, c.stride_h, c.stride_w));
    specs.push_back(LayerSpec::batchnorm("conv" + id + "_bn", cfg.bn_epsilon, cfg.bn_momentum));
    specs.push_back(LayerSpec::relu("conv" + id + "_relu"));
    if (i == 0) specs.push_back(LayerSpec::maxpool2d("pool1", cfg.pool_h, cfg.pool_w, cfg.pool_h, cfg.pool_w));
    specs.push_back(LayerSpec::dropout("conv" + id + "_drop", cfg.dropout));
  }
  for (std::size_t i = 0; i < cfg.fc_hidden.size(); ++i) {
    const std::string id = std::to_string(i + 1);
    specs.push_back(LayerSpec::fully_connected("fc" + id, cfg.fc_hidden[i]));
    specs.push_back(LayerSpec::batchnorm("fc" + id + "_bn", cfg.bn_epsilon, cfg.bn_momentum));
    specs.push_back(LayerSpec::relu("fc" + id + "_relu"));
    specs.push_back(LayerSpec::dropout("fc" + id + "_drop", cfg.dropout));
  }
  specs.push_back(LayerSpec::fully_connected("fc3", cfg.n_outputs));
  specs.push_back(LayerSpec::softmax("softmax"));
  return specs;
}

int conv_relu_index(const DetectorConfig& cfg, int stage) {
  const auto specs = detector_layer_specs(cfg);
  const std::string name = "conv" + std::to_string(stage) + "_relu";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].name == name) return static_cast<int>(i);
  }
  throw Error(ErrorCode::kInvalidArgument, "no conv stage " + std::to_string(stage));
}

namespace {

KwsModel build_backbone(const DetectorConfig& cfg, ModelKind kind, std::uint64_t seed) {
  cfg.validate();
  KwsModel m;
  m.kind = kind;
  m.config = cfg;
  Rng rng(seed);
  m.net = nn::Network<float>::build({1, cfg.input_frames, cfg.input_dims}, detector_layer_specs(cfg), rng);
  return m;
}

}  // namespace

KwsModel build_detector(const DetectorConfig& cfg, std::uint64_t seed) {
  if (cfg.n_outputs != 2) throw ValidationError("detector.n_outputs", "detector needs 2 outputs");
  return build_backbone(cfg, ModelKind::kDetector, seed);
}

KwsModel build_multi_aligned(DetectorConfig cfg, std::uint64_t seed) {
  cfg.n_outputs = kNumAlignmentClasses;
  return build_backbone(cfg, ModelKind::kMultiAligned, seed);
}

KwsModel attach_regression_head(const KwsModel& detector, bool frozen, std::uint64_t seed,
                                const RegressionHeadConfig& head) {
  if (detector.kind != ModelKind::kDetector) {
    throw Error(ErrorCode::kModelKindMismatch, std::string("model kind mismatch: regression head needs a detector, got ") +
                                                   to_string(detector.kind));
  }
  if (head.channels <= 0 || head.kernel_h <= 0 || head.kernel_w <= 0) {
    throw ValidationError("regression_head", "channels and kernel dims must be > 0");
  }
  const int tap = conv_relu_index(detector.config, head.tap_conv);
  const nn::Shape& map = detector.net.layer_output_shape(tap);
  if (map.size() != 3) {
    throw Error(ErrorCode::kShapeMismatch, "tap output " + nn::shape_string(map) + " is not a [C,H,W] feature map");
  }

  KwsModel m = detector;
  m.kind = ModelKind::kRegression;
  m.head = head;
  m.frozen_backbone = frozen;
  const int kh = std::min(head.kernel_h, map[1]);
  const int kw = std::min(head.kernel_w, map[2]);
  if (kh != head.kernel_h || kw != head.kernel_w) {
    m.warnings.push_back("regression head kernel clamped from " + std::to_string(head.kernel_h) + "x" +
                         std::to_string(head.kernel_w) + " to the " + std::to_string(map[1]) + "x" +
                         std::to_string(map[2]) + " tap map");
  }
  m.head->kernel_h = kh;
  m.head->kernel_w = kw;
  Rng rng(seed);
  m.net.attach_head(tap,
                    {LayerSpec::conv2d("reg_conv", head.channels, kh, kw), LayerSpec::relu("reg_relu"),
                     LayerSpec::fully_connected("reg_fc", 2)},
                    rng);
  m.net.set_main_trainable(!frozen);
  return m;
}

nn::Tensor<float> forward_detection(const KwsModel& model, const nn::Tensor<float>& batch) {
  return model.net.infer(batch);
}

nn::Tensor<float> forward_regression(const KwsModel& model, const nn::Tensor<float>& batch) {
  if (!model.net.has_head()) {
    throw Error(ErrorCode::kModelKindMismatch, "model kind mismatch: no regression head");
  }
  nn::Tensor<float> main_out, head_out;
  model.net.infer_both(batch, main_out, &head_out);
  return head_out;
}

nlohmann::json model_metadata(const KwsModel& model) {
  nlohmann::json j;
  j["model_kind"] = to_string(model.kind);
  j["detector"] = config::to_json(model.config);
  if (model.head) {
    j["regression_head"] = config::to_json(*model.head);
    j["frozen_backbone"] = model.frozen_backbone;
  }
  j["features"] = config::to_json(model.features);
  j["feature_stats"] = config::to_json(model.stats);
  j["training"] = model.training;
  return j;
}

std::string encode_model(const KwsModel& model, bool include_optimizer_state) {
  return nn::encode_checkpoint(model.net, model_metadata(model), include_optimizer_state);
}

KwsModel decode_model(const std::string& bytes) {
  auto ck = nn::decode_checkpoint(bytes);
  const auto& meta = ck.metadata;
  KwsModel m;
  try {
    m.kind = model_kind_from_string(meta.at("model_kind").get<std::string>());
    config::from_json(meta.at("detector"), m.config, "detector");
    if (meta.contains("regression_head")) {
      RegressionHeadConfig head;
      config::from_json(meta.at("regression_head"), head, "regression_head");
      m.head = head;
      m.frozen_backbone = meta.at("frozen_backbone").get<bool>();
    }
    config::from_json(meta.at("features"), m.features, "features");
    config::from_json(meta.at("feature_stats"), m.stats, "feature_stats");
    m.training = meta.at("training");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("model metadata: ") + e.what());
  }
  m.net = std::move(ck.network);
  return m;
}

void save_model(const std::filesystem::path& path, const KwsModel& model, bool include_optimizer_state) {
  nn::write_file_bytes(path, encode_model(model, include_optimizer_state));
}

KwsModel load_model(const std::filesystem::path& path) { return decode_model(nn::read_file_bytes(path)); }

}  // namespace kwsep::models
