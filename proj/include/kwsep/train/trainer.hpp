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
#include <array>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kwsep/data/windows.hpp"
#include "kwsep/models/models.hpp"
#include "kwsep/nn/adam.hpp"

namespace kwsep::train {

enum class TrainMode { kDetector, kMultiAligned, kRegressionFrozen, kRegressionMultitask };

const char* to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& name);
bool is_regression(TrainMode mode);

struct TrainConfig {
  TrainMode mode = TrainMode::kDetector;
  int steps = 5000;
  int batch_size = 32;
  double learning_rate = 0.001;
  std::uint64_t seed = 1;
  int eval_every = 500;          // 0 disables held-out evaluation
  int eval_examples = 512;       // fixed held-out windows per evaluation
  double multitask_lambda = 1.0;
  // Window jitter for regression training; unset uses the window config's.
  std::optional<double> regression_jitter_ms;

  void validate() const;
};

// Held-out metrics. accuracy and recall are classification metrics
// (absent for frozen regression); offset_mae is in window fractions.
struct EvalMetrics {
  std::optional<double> accuracy;
  std::vector<double> recall;  // per output class
  std::optional<double> offset_mae;
  int n = 0;

  // Scalar tracked for the best snapshot; larger is better.
  double score() const;
};

nlohmann::json to_json(const EvalMetrics& m);

struct TrainState {
  long step = 0;
  double loss_ema = 0.0;
  std::optional<double> best_score;
  long best_step = -1;
  Rng model_rng;
};

struct StepStats {
  long step = 0;
  double loss = 0.0;
  double ce = 0.0;
  double mse = 0.0;
  std::array<int, 4> composition{};  // examples per AlignmentClass in the batch
};

// Drives one training run. The model must match the mode: a 2-class
// detector for kDetector, a 4-class model for kMultiAligned, a model with a
// regression head for both regression modes.
class Trainer {
 public:
  Trainer(models::KwsModel model, TrainConfig cfg, data::WindowConfig window,
          const std::vector<data::FeaturedRecord>& train, const std::vector<data::FeaturedRecord>& heldout);

  // Runs until cfg.steps total steps have been taken. Writes one JSON line
  // per step (and per evaluation) to `log` when given.
  void run(std::ostream* log = nullptr);
  StepStats step();
  EvalMetrics evaluate() const;

  const models::KwsModel& model() const { return model_; }
  models::KwsModel& model() { return model_; }
  const std::optional<models::KwsModel>& best() const { return best_; }
  const TrainState& state() const { return state_; }
  const TrainConfig& config() const { return cfg_; }
  const std::vector<double>& loss_history() const { return loss_history_; }

  // Model with optimizer state and the train state embedded, from which
  // `resume` continues bit-identically.
  std::string encode_resumable() const;
  static Trainer resume(const std::string& bytes, const std::vector<data::FeaturedRecord>& train,
                        const std::vector<data::FeaturedRecord>& heldout);

 private:
  void refresh_training_metadata();

  models::KwsModel model_;
  TrainConfig cfg_;
  data::WindowConfig window_;
  data::WindowConfig sample_window_;
  const std::vector<data::FeaturedRecord>& train_;
  data::MinibatchSampler sampler_;
  std::vector<data::ExampleWindow> eval_set_;
  TrainState state_;
  std::optional<models::KwsModel> best_;
  std::vector<double> loss_history_;
  nn::AdamConfig adam_;
};

// Builds the untrained model a mode starts from. Regression modes need the
// trained detector. Feature settings and statistics are copied into it.
models::KwsModel initial_model(TrainMode mode, const models::DetectorConfig& detector_cfg,
                               const models::RegressionHeadConfig& head_cfg, const models::KwsModel* detector,
                               std::uint64_t seed);

}  // namespace kwsep::train
