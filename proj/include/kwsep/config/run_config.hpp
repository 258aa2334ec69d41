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
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>

#include "kwsep/audio/lfbe.hpp"
#include "kwsep/data/synth.hpp"
#include "kwsep/eval/harness.hpp"
#include "kwsep/models/models.hpp"
#include "kwsep/stream/endpointer.hpp"
#include "kwsep/train/trainer.hpp"

namespace kwsep::config {

struct CorpusConfig {
  data::SyntheticKeywordSpec synth;
  data::WindowConfig window;
  int n_positive = 200;
  int n_negative = 200;
  double heldout_fraction = 0.1;
};

struct PathsConfig {
  std::string corpus;    // corpus directory (gen-data output, train/eval input)
  std::string detector;  // detector checkpoint for regression training
  std::string out;
};

// Everything one experiment needs. The top-level seed drives corpus
// generation and training; train.seed is ignored in favour of it.
struct RunConfig {
  std::uint64_t seed = 1;
  audio::FeatureConfig features;
  models::DetectorConfig detector;
  models::RegressionHeadConfig regression_head;
  train::TrainConfig train;
  CorpusConfig corpus;
  stream::EndpointerConfig endpointer;
  eval::EvalConfig eval;
  PathsConfig paths;

  // Section validators plus cross-section consistency (window length and
  // feature dimension agree with the detector input, hop sizes agree).
  // eval.target_far is only required by the eval command.
  void validate() const;
};

// Strict: unknown keys and type mismatches raise ValidationError naming the
// key. Missing keys keep their defaults.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);

// Seed used for corpus generation under the run seed.
std::uint64_t corpus_seed(std::uint64_t run_seed);

// Every accepted key with its default value, as a JSON document.
std::string schema_document();

}  // namespace kwsep::config
