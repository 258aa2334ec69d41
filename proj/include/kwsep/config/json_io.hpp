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

#include <json.hpp>
#include <set>
#include <string>
#include <vector>

#include "kwsep/audio/lfbe.hpp"
#include "kwsep/data/synth.hpp"
#include "kwsep/error.hpp"
#include "kwsep/models/models.hpp"
#include "kwsep/eval/harness.hpp"
#include "kwsep/stream/endpointer.hpp"
#include "kwsep/train/trainer.hpp"

namespace kwsep::config {

using nlohmann::json;

// Strict view of one JSON object. Every key must be consumed by a read()
// or child() before finish(), otherwise the leftover key is reported.
// Missing keys keep the caller's default.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string prefix);

  template <typename T>
  void read(const char* key, T& out) {
    const json* v = take(key);
    if (v == nullptr) return;
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!v->is_number_integer()) {
        throw ValidationError(path(key), std::string("expected ") + type_name(out) + ", got " + v->dump());
      }
    }
    try {
      out = v->get<T>();
    } catch (const json::exception&) {
      throw ValidationError(path(key), std::string("expected ") + type_name(out) + ", got " + v->type_name());
    }
  }

  const json* child(const char* key) { return take(key); }
  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }
  void finish() const;

 private:
  const json* take(const char* key);
  static const char* type_name(bool) { return "boolean"; }
  static const char* type_name(int) { return "integer"; }
  static const char* type_name(std::uint64_t) { return "unsigned integer"; }
  static const char* type_name(double) { return "number"; }
  static const char* type_name(const std::string&) { return "string"; }
  template <typename T>
  static const char* type_name(const T&) {
    return "array";
  }

  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

json to_json(const audio::FeatureConfig& c);
void from_json(const json& j, audio::FeatureConfig& c, const std::string& prefix);

json to_json(const audio::FeatureStats& s);
void from_json(const json& j, audio::FeatureStats& s, const std::string& prefix);

json to_json(const models::DetectorConfig& c);
void from_json(const json& j, models::DetectorConfig& c, const std::string& prefix);

json to_json(const models::RegressionHeadConfig& c);
void from_json(const json& j, models::RegressionHeadConfig& c, const std::string& prefix);

json to_json(const data::WindowConfig& c);
void from_json(const json& j, data::WindowConfig& c, const std::string& prefix);

json to_json(const data::SyntheticKeywordSpec& c);
void from_json(const json& j, data::SyntheticKeywordSpec& c, const std::string& prefix);

json to_json(const train::TrainConfig& c);
void from_json(const json& j, train::TrainConfig& c, const std::string& prefix);

json to_json(const stream::EndpointerConfig& c);
void from_json(const json& j, stream::EndpointerConfig& c, const std::string& prefix);

json to_json(const eval::EvalConfig& c);
void from_json(const json& j, eval::EvalConfig& c, const std::string& prefix);

}  // namespace kwsep::config
