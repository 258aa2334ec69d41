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

#include "kwsep/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kwsep/config/json_io.hpp"
#include "kwsep/data/corpus.hpp"
#include "kwsep/error.hpp"
#include "kwsep/nn/checkpoint.hpp"
#include "kwsep/nn/loss.hpp"

namespace kwsep::train {

using models::AlignmentClass;
using nlohmann::json;

const char* to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kDetector: return "detector";
    case TrainMode::kMultiAligned: return "multi_aligned";
    case TrainMode::kRegressionFrozen: return "regression_frozen";
    case TrainMode::kRegressionMultitask: return "regression_multitask";
  }
  return "unknown";
}

TrainMode train_mode_from_string(const std::string& name) {
  for (auto m : {TrainMode::kDetector, TrainMode::kMultiAligned, TrainMode::kRegressionFrozen,
                 TrainMode::kRegressionMultitask}) {
    if (name == to_string(m)) return m;
  }
  throw ValidationError("train.mode", "must be one of detector, multi_aligned, regression_frozen, regression_multitask");
}

void TrainConfig::validate() const {
  if (steps <= 0) throw ValidationError("train.steps", "must be > 0");
  if (batch_size < 2) throw ValidationError("train.batch_size", "must be >= 2 (batchnorm needs batch statistics)");
  if (!(learning_rate > 0)) throw ValidationError("train.learning_rate", "must be > 0");
  if (eval_every < 0) throw ValidationError("train.eval_every", "must be >= 0");
  if (eval_examples < 1) throw ValidationError("train.eval_examples", "must be >= 1");
  if (!(multitask_lambda >= 0)) throw ValidationError("train.multitask_lambda", "must be >= 0");
  if (regression_jitter_ms && !(*regression_jitter_ms >= 0)) {
    throw ValidationError("train.regression_jitter_ms", "must be >= 0");
  }
}

double EvalMetrics::score() const {
  if (offset_mae) return -*offset_mae;
  if (!recall.empty()) {
    double s = 0;
    for (double r : recall) s += r;
    return s / static_cast<double>(recall.size());
  }
  return accuracy.value_or(0.0);
}

json to_json(const EvalMetrics& m) {
  json j;
  j["n"] = m.n;
  if (m.accuracy) j["accuracy"] = *m.accuracy;
  if (!m.recall.empty()) j["recall"] = m.recall;
  if (m.offset_mae) j["offset_mae"] = *m.offset_mae;
  j["score"] = m.score();
  return j;
}

bool is_regression(TrainMode mode) {
  return mode == TrainMode::kRegressionFrozen || mode == TrainMode::kRegressionMultitask;
}

namespace {

std::string rng_to_string(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng rng_from_string(const std::string& s) {
  Rng rng;
  std::istringstream is(s);
  is >> rng;
  if (!is) throw Error(ErrorCode::kMalformedFile, "corrupt rng state in train state");
  return rng;
}

void check_model(const models::KwsModel& m, TrainMode mode) {
  auto mismatch = [&](const std::string& need) {
    throw Error(ErrorCode::kModelKindMismatch, std::string("model kind mismatch: mode ") + to_string(mode) +
                                                   " needs " + need + ", got " + models::to_string(m.kind));
  };
  switch (mode) {
    case TrainMode::kDetector:
      if (m.kind != models::ModelKind::kDetector) mismatch("a detector");
      break;
    case TrainMode::kMultiAligned:
      if (m.kind != models::ModelKind::kMultiAligned) mismatch("a multi-aligned model");
      break;
    case TrainMode::kRegressionFrozen:
    case TrainMode::kRegressionMultitask:
      if (m.kind != models::ModelKind::kRegression || !m.net.has_head()) mismatch("a regression model");
      if ((mode == TrainMode::kRegressionFrozen) != m.frozen_backbone) {
        throw Error(ErrorCode::kInvalidArgument, "regression model frozen flag does not match the training mode");
      }
      break;
  }
}

std::vector<int> labels_of(const std::vector<data::ExampleWindow>& batch, int n_outputs) {
  std::vector<int> labels(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) labels[i] = models::class_label(batch[i].alignment, n_outputs);
  return labels;
}

// Offset targets for the windows that carry them; `rows` receives their
// batch indices.
nn::Tensor<float> offset_targets(const std::vector<data::ExampleWindow>& batch, std::vector<int>& rows) {
  rows.clear();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].offsets) rows.push_back(static_cast<int>(i));
  }
  nn::Tensor<float> t({static_cast<int>(rows.size()), 2});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& o = *batch[rows[r]].offsets;
    t[2 * r] = static_cast<float>(o.start_rel);
    t[2 * r + 1] = static_cast<float>(o.end_rel);
  }
  return t;
}

nn::Tensor<float> gather_rows(const nn::Tensor<float>& x, const std::vector<int>& rows) {
  const int k = x.dim(1);
  nn::Tensor<float> out({static_cast<int>(rows.size()), k});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(x.data() + static_cast<std::size_t>(rows[r]) * k, k, out.data() + r * k);
  }
  return out;
}

constexpr double kLossEmaDecay = 0.98;

}  // namespace

models::KwsModel initial_model(TrainMode mode, const models::DetectorConfig& detector_cfg,
                               const models::RegressionHeadConfig& head_cfg, const models::KwsModel* detector,
                               std::uint64_t seed) {
  const std::uint64_t init_seed = derive_seed(seed, 3);
  switch (mode) {
    case TrainMode::kDetector: {
      auto cfg = detector_cfg;
      cfg.n_outputs = 2;
      return models::build_detector(cfg, init_seed);
    }
    case TrainMode::kMultiAligned: return models::build_multi_aligned(detector_cfg, init_seed);
    case TrainMode::kRegressionFrozen:
    case TrainMode::kRegressionMultitask:
      if (detector == nullptr) throw Error(ErrorCode::kInvalidArgument, "regression training needs a detector");
      return models::attach_regression_head(*detector, mode == TrainMode::kRegressionFrozen, init_seed, head_cfg);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown train mode");
}

namespace {

data::WindowConfig sampling_window(const TrainConfig& cfg, data::WindowConfig window) {
  if (is_regression(cfg.mode) && cfg.regression_jitter_ms) window.jitter_ms = *cfg.regression_jitter_ms;
  return window;
}

data::SamplerMode mode_sampler(TrainMode mode) {
  switch (mode) {
    case TrainMode::kMultiAligned: return data::SamplerMode::kMultiAligned;
    case TrainMode::kRegressionFrozen: return data::SamplerMode::kRegression;
    default: return data::SamplerMode::kDetector;
  }
}

}  // namespace

Trainer::Trainer(models::KwsModel model, TrainConfig cfg, data::WindowConfig window,
                 const std::vector<data::FeaturedRecord>& train, const std::vector<data::FeaturedRecord>& heldout)
    : model_(std::move(model)),
      cfg_(cfg),
      window_(window),
      sample_window_(sampling_window(cfg, window)),
      train_(train),
      sampler_(train, mode_sampler(cfg.mode), sample_window_, derive_seed(cfg.seed, 2)) {
  cfg_.validate();
  window_.validate();
  sample_window_.validate();
  check_model(model_, cfg_.mode);
  if (window_.window_frames != model_.window_frames()) {
    throw ValidationError("window.window_frames", "must equal detector.input_frames");
  }
  adam_.learning_rate = cfg_.learning_rate;
  state_.model_rng = Rng(derive_seed(cfg_.seed, 1));
  if (cfg_.eval_every > 0) {
    if (heldout.empty()) throw Error(ErrorCode::kInvalidArgument, "held-out evaluation needs held-out records");
    data::MinibatchSampler eval_sampler(heldout, mode_sampler(cfg_.mode), sample_window_, derive_seed(cfg_.seed, 4));
    eval_set_ = eval_sampler.next(cfg_.eval_examples);
  }
  refresh_training_metadata();
}

StepStats Trainer::step() {
  auto batch = sampler_.next(cfg_.batch_size);
  const auto x = data::stack_windows(batch);
  StepStats st;
  st.step = state_.step;
  for (const auto& ex : batch) ++st.composition[static_cast<std::size_t>(ex.alignment)];

  auto& net = model_.net;
  net.zero_grad();
  using Opts = nn::Network<float>::ForwardOptions;
  switch (cfg_.mode) {
    case TrainMode::kDetector:
    case TrainMode::kMultiAligned: {
      net.forward(x, state_.model_rng, Opts{});
      const auto labels = labels_of(batch, model_.n_outputs());
      auto ce = nn::cross_entropy_loss<float>(net.output(), labels);
      net.backward(&ce.grad, true, nullptr);
      st.ce = ce.loss;
      st.loss = ce.loss;
      auto params = net.parameters();
      nn::adam_step<float>(params, adam_);
      break;
    }
    case TrainMode::kRegressionFrozen: {
      // Backbone in inference mode: batchnorm uses (and keeps) its running
      // statistics, dropout is off.
      net.forward(x, state_.model_rng, Opts{nn::Mode::kInfer, false, true, nn::Mode::kTrain});
      std::vector<int> rows;
      const auto target = offset_targets(batch, rows);
      auto mse = nn::mse_loss<float>(net.head_output(), target);
      net.backward(nullptr, false, &mse.grad, false);
      st.mse = mse.loss;
      st.loss = mse.loss;
      auto params = net.head_parameters();
      nn::adam_step<float>(params, adam_);
      break;
    }
    case TrainMode::kRegressionMultitask: {
      net.forward(x, state_.model_rng, Opts{nn::Mode::kTrain, true, true, nn::Mode::kTrain});
      const auto labels = labels_of(batch, model_.n_outputs());
      auto ce = nn::cross_entropy_loss<float>(net.output(), labels);
      std::vector<int> rows;
      const auto target = offset_targets(batch, rows);
      nn::Tensor<float> grad_head(net.head_output().shape());
      if (!rows.empty()) {
        auto mse = nn::mse_loss<float>(gather_rows(net.head_output(), rows), target);
        st.mse = mse.loss;
        const auto lambda = static_cast<float>(cfg_.multitask_lambda);
        for (std::size_t r = 0; r < rows.size(); ++r) {
          grad_head[2 * static_cast<std::size_t>(rows[r])] = lambda * mse.grad[2 * r];
          grad_head[2 * static_cast<std::size_t>(rows[r]) + 1] = lambda * mse.grad[2 * r + 1];
        }
      }
      net.backward(&ce.grad, true, &grad_head, true);
      st.ce = ce.loss;
      st.loss = ce.loss + cfg_.multitask_lambda * st.mse;
      auto params = net.parameters();
      nn::adam_step<float>(params, adam_);
      break;
    }
  }
  if (!std::isfinite(st.loss)) {
    throw Error(ErrorCode::kInvalidState, "training diverged at step " + std::to_string(state_.step));
  }
  state_.loss_ema = state_.step == 0 ? st.loss : kLossEmaDecay * state_.loss_ema + (1 - kLossEmaDecay) * st.loss;
  loss_history_.push_back(st.loss);
  ++state_.step;
  return st;
}

EvalMetrics Trainer::evaluate() const {
  EvalMetrics m;
  m.n = static_cast<int>(eval_set_.size());
  if (eval_set_.empty()) return m;
  const bool classify = cfg_.mode != TrainMode::kRegressionFrozen;
  const bool regress = is_regression(cfg_.mode);
  const int k = model_.n_outputs();
  std::vector<int> hits(k, 0), totals(k, 0);
  int correct = 0;
  double abs_err = 0.0;
  int n_offsets = 0;
  constexpr std::size_t kChunk = 128;
  for (std::size_t lo = 0; lo < eval_set_.size(); lo += kChunk) {
    const std::size_t hi = std::min(eval_set_.size(), lo + kChunk);
    std::vector<data::ExampleWindow> chunk(eval_set_.begin() + static_cast<std::ptrdiff_t>(lo),
                                           eval_set_.begin() + static_cast<std::ptrdiff_t>(hi));
    const auto x = data::stack_windows(chunk);
    nn::Tensor<float> probs, offsets;
    model_.net.infer_both(x, probs, regress ? &offsets : nullptr);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      if (classify) {
        const int label = models::class_label(chunk[i].alignment, k);
        const float* p = probs.data() + i * static_cast<std::size_t>(k);
        const int pred = static_cast<int>(std::max_element(p, p + k) - p);
        ++totals[label];
        if (pred == label) {
          ++hits[label];
          ++correct;
        }
      }
      if (regress && chunk[i].offsets) {
        abs_err += std::abs(offsets[2 * i] - chunk[i].offsets->start_rel);
        abs_err += std::abs(offsets[2 * i + 1] - chunk[i].offsets->end_rel);
        n_offsets += 2;
      }
    }
  }
  if (classify) {
    m.accuracy = static_cast<double>(correct) / static_cast<double>(eval_set_.size());
    for (int c = 0; c < k; ++c) m.recall.push_back(totals[c] ? static_cast<double>(hits[c]) / totals[c] : 0.0);
  }
  if (regress && n_offsets > 0) m.offset_mae = abs_err / n_offsets;
  return m;
}

void Trainer::run(std::ostream* log) {
  while (state_.step < cfg_.steps) {
    const auto st = step();
    if (log) {
      json line{{"step", st.step}, {"loss", st.loss}};
      if (cfg_.mode != TrainMode::kRegressionFrozen) line["ce"] = st.ce;
      if (is_regression(cfg_.mode)) line["mse"] = st.mse;
      json comp;
      for (int c = 0; c < models::kNumAlignmentClasses; ++c) {
        comp[models::to_string(static_cast<AlignmentClass>(c))] = st.composition[c];
      }
      line["batch"] = comp;
      *log << line.dump() << '\n';
    }
    const bool last = state_.step == cfg_.steps;
    if (cfg_.eval_every > 0 && (state_.step % cfg_.eval_every == 0 || last)) {
      const auto m = evaluate();
      const double score = m.score();
      const bool improved = !state_.best_score || score > *state_.best_score;
      if (improved) {
        state_.best_score = score;
        state_.best_step = state_.step;
        refresh_training_metadata();
        best_ = model_;
      }
      if (log) *log << json{{"step", state_.step}, {"eval", to_json(m)}, {"best", improved}}.dump() << '\n';
    }
  }
  refresh_training_metadata();
}

void Trainer::refresh_training_metadata() {
  json t = model_.training.is_object() ? model_.training : json::object();
  if (is_regression(cfg_.mode) && !t.contains("detector") && t.contains("mode")) {
    // Keep the detector's own record when the head is first trained.
    t = json{{"detector", t}, {"median_duration_ms", t.value("median_duration_ms", 0.0)}};
  }
  t["mode"] = to_string(cfg_.mode);
  t["config"] = config::to_json(cfg_);
  t["window"] = config::to_json(window_);
  t["median_duration_ms"] = data::median_duration_ms(train_);
  t["step"] = state_.step;
  if (state_.best_score) {
    t["best_score"] = *state_.best_score;
    t["best_step"] = state_.best_step;
  }
  model_.training = t;
}

std::string Trainer::encode_resumable() const {
  models::KwsModel m = model_;
  m.training["train_state"] = {{"step", state_.step},
                               {"loss_ema", state_.loss_ema},
                               {"sampler_rng", rng_to_string(sampler_.rng())},
                               {"model_rng", rng_to_string(state_.model_rng)}};
  if (state_.best_score) {
    m.training["train_state"]["best_score"] = *state_.best_score;
    m.training["train_state"]["best_step"] = state_.best_step;
  }
  return models::encode_model(m, true);
}

Trainer Trainer::resume(const std::string& bytes, const std::vector<data::FeaturedRecord>& train,
                        const std::vector<data::FeaturedRecord>& heldout) {
  auto model = models::decode_model(bytes);
  json ts;
  TrainConfig cfg;
  data::WindowConfig window;
  try {
    ts = model.training.at("train_state");
    config::from_json(model.training.at("config"), cfg, "train");
    config::from_json(model.training.at("window"), window, "window");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("checkpoint has no resumable train state: ") + e.what());
  }
  model.training.erase("train_state");
  Trainer t(std::move(model), cfg, window, train, heldout);
  try {
    t.state_.step = ts.at("step").get<long>();
    t.state_.loss_ema = ts.at("loss_ema").get<double>();
    t.sampler_.rng() = rng_from_string(ts.at("sampler_rng").get<std::string>());
    t.state_.model_rng = rng_from_string(ts.at("model_rng").get<std::string>());
    if (ts.contains("best_score")) {
      t.state_.best_score = ts.at("best_score").get<double>();
      t.state_.best_step = ts.at("best_step").get<long>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("corrupt train state: ") + e.what());
  }
  t.refresh_training_metadata();
  return t;
}

}  // namespace kwsep::train
