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

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kwsep/data/windows.hpp"
#include "kwsep/eval/report.hpp"
#include "kwsep/models/models.hpp"
#include "kwsep/stream/endpointer.hpp"

namespace kwsep::eval {

enum class LongSplit { kFixed, kP90 };

struct EvalConfig {
  std::optional<double> target_far;  // required
  LongSplit long_split = LongSplit::kFixed;
  double long_threshold_ms = 800.0;  // used by kFixed
  double match_window_ms = 1000.0;
  std::vector<std::string> methods;  // empty: each model's default methods

  void validate() const;
};

const char* to_string(LongSplit s);
LongSplit long_split_from_string(const std::string& name);

struct EvalModel {
  std::string label;
  const models::KwsModel* model = nullptr;
};

struct EvalResult {
  EvalReport report;
  std::vector<std::pair<std::string, std::vector<MatchedPair>>> pairs;  // by method row name
};

// Default methods: const for a detector, the two regression readouts and
// const for a regression model, aligned for a multi-aligned model. With
// cfg.methods set, each named method runs on every model that supports it;
// a method no model supports throws kModelKindMismatch.
std::vector<stream::EndpointMethod> methods_for(const models::KwsModel& model, const EvalConfig& cfg);

// Detection score of one stream: the largest smoothed center posterior.
// On a positive stream only points whose implied keyword center (window
// center) lies within match_window_ms of a true center count.
double stream_score(const stream::PosteriorTrace& smoothed, std::span<const data::Interval> truth,
                    bool positive, double match_window_ms);

std::string corpus_digest(std::span<const data::FeaturedRecord> corpus);

// `corpus` carries raw features; each model normalizes with its own stats.
EvalResult evaluate(std::span<const EvalModel> models, std::span<const data::FeaturedRecord> corpus,
                    const stream::EndpointerConfig& endpointer, const EvalConfig& cfg);

}  // namespace kwsep::eval
