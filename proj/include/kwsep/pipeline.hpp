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

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "kwsep/config/run_config.hpp"
#include "kwsep/data/corpus.hpp"
#include "kwsep/eval/harness.hpp"

// End-to-end steps shared by the command-line tool and the acceptance run.
namespace kwsep::pipeline {

// Synthetic corpus for cfg.corpus under config::corpus_seed(cfg.seed).
std::vector<data::StreamRecord> make_corpus(const config::RunConfig& cfg);

struct TrainOutcome {
  models::KwsModel model;      // best held-out snapshot (final model without evaluations)
  std::string final_resumable;  // final state, loadable by train::Trainer::resume
};

// Trains cfg.train.mode on `corpus`. Detector and multi-aligned runs fit
// normalization statistics on their training split; regression runs reuse
// the detector's features and statistics.
TrainOutcome train(const config::RunConfig& cfg, std::span<const data::StreamRecord> corpus,
                   const models::KwsModel* detector, std::ostream* log);

// All models must share one feature configuration.
eval::EvalResult evaluate(const config::RunConfig& cfg, std::span<const eval::EvalModel> models,
                          std::span<const data::StreamRecord> corpus);

}  // namespace kwsep::pipeline
