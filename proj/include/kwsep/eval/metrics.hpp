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

#include "kwsep/data/synth.hpp"

namespace kwsep::eval {

// Population standard deviation, accumulated at 64-bit around the mean.
double population_std(std::span<const double> x);
double mean(std::span<const double> x);

// Linear-interpolation quantile (q in [0, 1]) of an unsorted sample.
double quantile(std::vector<double> x, double q);

struct MatchedPair {
  std::string stream_id;
  data::Interval estimate;
  data::Interval truth;

  double start_error_ms() const { return estimate.start_ms - truth.start_ms; }
  double end_error_ms() const { return estimate.end_ms - truth.end_ms; }
  bool operator==(const MatchedPair&) const = default;
};

// One stream's ground truth and endpoint estimates for a single method.
struct StreamEstimates {
  std::string stream_id;
  std::vector<data::Interval> truth;
  std::vector<data::Interval> estimates;
};

struct MatchResult {
  std::vector<MatchedPair> pairs;
  int unmatched_estimates = 0;  // spurious detections, excluded from the stats
  int missed_truths = 0;
};

// Within each stream, every ground-truth interval takes the estimate whose
// center is nearest its own, if within match_window_ms. Each estimate is
// used at most once. Ties resolve on (start, end) so the outcome does not
// depend on estimate order.
MatchResult match_estimates(std::span<const StreamEstimates> streams, double match_window_ms);

struct PartitionStats {
  int n = 0;
  double start_mean_ms = 0.0;
  double start_std_ms = 0.0;
  double end_mean_ms = 0.0;
  double end_std_ms = 0.0;
  bool operator==(const PartitionStats&) const = default;
};

struct EndpointErrorStats {
  PartitionStats all;
  std::optional<PartitionStats> long_partition;  // absent when no pair is long
  double long_threshold_ms = 800.0;
  int unmatched_estimates = 0;
  int missed_truths = 0;
  bool operator==(const EndpointErrorStats&) const = default;
};

// Throws when `pairs` is empty.
PartitionStats partition_stats(std::span<const MatchedPair> pairs);

// (all, long): long holds pairs whose true duration exceeds threshold_ms.
std::pair<std::vector<MatchedPair>, std::vector<MatchedPair>> split_long(std::span<const MatchedPair> pairs,
                                                                          double threshold_ms);

EndpointErrorStats endpoint_std_error(const MatchResult& matched, double long_threshold_ms);

struct RocPoint {
  double threshold = 0.0;
  double far = 0.0;  // fraction of negative streams with a detection
  double frr = 0.0;  // fraction of positive streams without one
  bool operator==(const RocPoint&) const = default;
};

// A stream is detected at threshold t when its score >= t (a threshold
// strictly above the score rejects). Candidate thresholds are the distinct
// scores, ascending.
RocPoint roc_point(std::span<const double> positive_scores, std::span<const double> negative_scores,
                   double threshold);
std::vector<RocPoint> far_sweep(std::span<const double> positive_scores, std::span<const double> negative_scores);

struct FrrAtFar {
  double target_far = 0.0;
  RocPoint point;
  bool attainable = true;  // false: no candidate reaches the target; threshold = max score
  bool operator==(const FrrAtFar&) const = default;
};

// Smallest candidate threshold whose FAR is <= target.
FrrAtFar frr_at_far(std::span<const double> positive_scores, std::span<const double> negative_scores,
                    double target_far);

}  // namespace kwsep::eval
