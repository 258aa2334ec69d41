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

#include "kwsep/pipeline.hpp"

#include "kwsep/error.hpp"
#include "kwsep/train/trainer.hpp"

namespace kwsep::pipeline {

std::vector<data::StreamRecord> make_corpus(const config::RunConfig& cfg) {
  return data::generate_corpus(cfg.corpus.synth, cfg.corpus.window, cfg.corpus.n_positive, cfg.corpus.n_negative,
                               config::corpus_seed(cfg.seed));
}

TrainOutcome train(const config::RunConfig& cfg, std::span<const data::StreamRecord> corpus,
                   const models::KwsModel* detector, std::ostream* log) {
  const bool regression = train::is_regression(cfg.train.mode);
  if (regression && detector == nullptr) {
    throw ValidationError("paths.detector", "regression training needs a detector checkpoint");
  }
  if (regression && detector->kind != models::ModelKind::kDetector) {
    throw Error(ErrorCode::kModelKindMismatch, std::string("model kind mismatch: regression training needs a ") +
                                                   "detector checkpoint, got " + models::to_string(detector->kind));
  }
  const audio::FeatureConfig& features = regression ? detector->features : cfg.features;
  auto split = data::split_holdout(data::extract_features(corpus, features), cfg.corpus.heldout_fraction);
  const audio::FeatureStats stats = regression ? detector->stats : data::corpus_stats(split.train);
  data::normalize_in_place(split.train, stats);
  data::normalize_in_place(split.heldout, stats);

  auto model = train::initial_model(cfg.train.mode, cfg.detector, cfg.regression_head, detector, cfg.seed);
  model.features = features;
  model.stats = stats;
  auto tc = cfg.train;
  tc.seed = cfg.seed;
  train::Trainer trainer(std::move(model), tc, cfg.corpus.window, split.train, split.heldout);
  trainer.run(log);
  TrainOutcome out{trainer.best() ? *trainer.best() : trainer.model(), trainer.encode_resumable()};
  return out;
}

eval::EvalResult evaluate(const config::RunConfig& cfg, std::span<const eval::EvalModel> models,
                          std::span<const data::StreamRecord> corpus) {
  if (models.empty()) throw Error(ErrorCode::kInvalidArgument, "evaluation needs at least one model");
  const auto& features = models.front().model->features;
  for (const auto& m : models) {
    if (!(m.model->features == features)) {
      throw Error(ErrorCode::kInvalidArgument, "model '" + m.label + "' uses a different feature configuration");
    }
  }
  const auto featured = data::extract_features(corpus, features);
  return eval::evaluate(models, featured, cfg.endpointer, cfg.eval);
}

}  // namespace kwsep::pipeline
