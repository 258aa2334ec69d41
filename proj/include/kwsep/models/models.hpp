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
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "kwsep/audio/lfbe.hpp"
#include "kwsep/nn/network.hpp"

namespace kwsep::models {

enum class ModelKind { kDetector, kMultiAligned, kRegression };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// Softmax class indices. Output 0 is the center-aligned keyword posterior
// for both the 2-class detector and the 4-class multi-aligned model.
enum class AlignmentClass { kCenter = 0, kPostCenterStart = 1, kEndAligned = 2, kNegative = 3 };

inline constexpr int kNumAlignmentClasses = 4;
inline constexpr int kDetectorKeyword = 0;
inline constexpr int kDetectorNonKeyword = 1;

const char* to_string(AlignmentClass c);
AlignmentClass alignment_from_string(const std::string& name);

// Label of an example for a model with `n_outputs` classes.
int class_label(AlignmentClass c, int n_outputs);

struct ConvStage {
  int channels = 0;
  int kernel_h = 3;
  int kernel_w = 3;
  int stride_h = 1;
  int stride_w = 1;

  bool operator==(const ConvStage&) const = default;
};

// Five conv layers (max-pool after the first) plus three fully connected
// layers, softmax on top. Time runs along H, mel bins along W.
struct DetectorConfig {
  int input_frames = 100;
  int input_dims = 64;
  std::array<ConvStage, 5> conv{{
      {32, 5, 5, 1, 1},
      {64, 3, 3, 3, 1},
      {64, 3, 3, 1, 1},
      {64, 3, 3, 1, 1},
      {64, 3, 3, 1, 1},
  }};
  int pool_h = 2;
  int pool_w = 2;
  std::array<int, 2> fc_hidden{256, 128};
  int n_outputs = 2;
  double dropout = 0.3;
  double bn_momentum = 0.99;
  double bn_epsilon = 1e-5;

  // Throws ValidationError; shape feasibility is checked at build time.
  void validate() const;
  bool operator==(const DetectorConfig&) const = default;
};

struct RegressionHeadConfig {
  int channels = 200;
  int kernel_h = 5;
  int kernel_w = 5;
  int tap_conv = 4;  // 1-based conv stage whose post-ReLU output feeds the head

  bool operator==(const RegressionHeadConfig&) const = default;
};

// A trained or freshly built model together with everything needed to run
// it on audio: feature settings and normalization statistics.
struct KwsModel {
  ModelKind kind = ModelKind::kDetector;
  DetectorConfig config;
  std::optional<RegressionHeadConfig> head;
  bool frozen_backbone = false;
  audio::FeatureConfig features;
  audio::FeatureStats stats;
  nlohmann::json training = nlohmann::json::object();
  std::vector<std::string> warnings;
  nn::Network<float> net;

  int window_frames() const { return config.input_frames; }
  double window_ms() const { return config.input_frames * features.hop_ms; }
  int n_outputs() const { return config.n_outputs; }
};

// Layer specs for the main path; exposed so tests can recount parameters.
std::vector<nn::LayerSpec> detector_layer_specs(const DetectorConfig& cfg);

// Index (into the main layer list) of conv stage `stage`'s ReLU.
int conv_relu_index(const DetectorConfig& cfg, int stage);

// 2-output detector. Throws kShapeMismatch naming the layer that no longer
// fits when input_frames/input_dims are too small for the conv stack.
KwsModel build_detector(const DetectorConfig& cfg, std::uint64_t seed);

// Same backbone with a 4-output softmax (center, post_center_start,
// end_aligned, negative).
KwsModel build_multi_aligned(DetectorConfig cfg, std::uint64_t seed);

// Adds the start/end regression head on the conv-4 activations of a 2-class
// detector. Kernel dims larger than the tapped map are clamped to it (with a
// warning in `warnings`). With `frozen`, every main-path parameter is marked
// non-trainable.
KwsModel attach_regression_head(const KwsModel& detector, bool frozen, std::uint64_t seed,
                                const RegressionHeadConfig& head = {});

// Posteriors [N, n_outputs] for a batch [N, 1, frames, dims].
nn::Tensor<float> forward_detection(const KwsModel& model, const nn::Tensor<float>& batch);

// Relative (start, end) offsets [N, 2]; requires a regression head.
nn::Tensor<float> forward_regression(const KwsModel& model, const nn::Tensor<float>& batch);

nlohmann::json model_metadata(const KwsModel& model);
std::string encode_model(const KwsModel& model, bool include_optimizer_state = false);
KwsModel decode_model(const std::string& bytes);
void save_model(const std::filesystem::path& path, const KwsModel& model, bool include_optimizer_state = false);
KwsModel load_model(const std::filesystem::path& path);

}  // namespace kwsep::models
