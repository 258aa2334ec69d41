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
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "kwsep/eval/metrics.hpp"

namespace kwsep::eval {

inline constexpr int kReportSchemaVersion = 1;

struct MethodReport {
  std::string name;    // unique row label
  std::string method;  // const / regression_thres_crossing / ...
  std::string model;   // checkpoint label
  EndpointErrorStats stats;
  int n_estimates = 0;
  int n_fallback = 0;
  bool operator==(const MethodReport&) const = default;
};

struct DetectionReport {
  std::string model;
  RocPoint operating;  // at the endpointer threshold
  FrrAtFar at_target;
  int n_positive = 0;
  int n_negative = 0;
  bool operator==(const DetectionReport&) const = default;
};

// Per positive keyword, the nearest aligned estimate (within the match
// window) that recorded both peak times; passed counts those whose
// post_center_start peak came no later than the end_aligned peak.
struct PeakOrder {
  std::string model;
  int n = 0;
  int passed = 0;
  double rate() const { return n == 0 ? 0.0 : static_cast<double>(passed) / n; }
  bool operator==(const PeakOrder&) const = default;
};

struct EvalReport {
  int schema_version = kReportSchemaVersion;
  std::string corpus_digest;
  int n_streams = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<MethodReport> methods;
  std::vector<DetectionReport> detection;
  std::vector<PeakOrder> peak_order;
  bool operator==(const EvalReport&) const = default;
};

nlohmann::json to_json(const EvalReport& r);
// Throws kMalformedFile on a missing field or a different schema_version.
EvalReport report_from_json(const nlohmann::json& j);

void write_report(const std::filesystem::path& path, const EvalReport& r);
EvalReport read_report(const std::filesystem::path& path);

// One row per method: name,method,model,n,start_mean_ms,start_std_ms,
// end_mean_ms,end_std_ms, the same four for the long partition (empty when
// absent), then unmatched, missed and fallback counts.
void write_summary_csv(std::ostream& os, const EvalReport& r);

// Per-pair errors for histograms: name,stream_id,true_start_ms,true_end_ms,
// start_error_ms,end_error_ms.
void write_errors_csv(std::ostream& os, std::span<const std::pair<std::string, std::vector<MatchedPair>>> rows);

// Side-by-side std table over several reports: one row per (report, method).
void write_compare_csv(std::ostream& os, std::span<const std::string> labels, std::span<const EvalReport> reports);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace kwsep::eval
