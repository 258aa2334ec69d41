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

#include "kwsep/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "kwsep/error.hpp"

namespace kwsep::eval {

double mean(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::kInvalidArgument, "mean of an empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double population_std(std::span<const double> x) {
  const double m = mean(x);
  double sq = 0.0;
  for (double v : x) sq += (v - m) * (v - m);
  return std::sqrt(sq / static_cast<double>(x.size()));
}

double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw Error(ErrorCode::kInvalidArgument, "quantile of an empty sample");
  if (!(q >= 0 && q <= 1)) throw Error(ErrorCode::kInvalidArgument, "quantile level must be in [0, 1]");
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

MatchResult match_estimates(std::span<const StreamEstimates> streams, double match_window_ms) {
  MatchResult out;
  for (const auto& s : streams) {
    std::vector<bool> used(s.estimates.size(), false);
    for (const auto& truth : s.truth) {
      std::optional<std::size_t> best;
      auto key = [&](std::size_t i) {
        const auto& e = s.estimates[i];
        return std::make_tuple(std::abs(e.center_ms() - truth.center_ms()), e.start_ms, e.end_ms);
      };
      for (std::size_t i = 0; i < s.estimates.size(); ++i) {
        if (used[i]) continue;
        if (std::abs(s.estimates[i].center_ms() - truth.center_ms()) > match_window_ms) continue;
        if (!best || key(i) < key(*best)) best = i;
      }
      if (best) {
        used[*best] = true;
        out.pairs.push_back({s.stream_id, s.estimates[*best], truth});
      } else {
        ++out.missed_truths;
      }
    }
    out.unmatched_estimates += static_cast<int>(std::count(used.begin(), used.end(), false));
  }
  return out;
}

PartitionStats partition_stats(std::span<const MatchedPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "endpoint statistics need at least one matched pair");
  std::vector<double> s, e;
  for (const auto& p : pairs) {
    s.push_back(p.start_error_ms());
    e.push_back(p.end_error_ms());
  }
  PartitionStats st;
  st.n = static_cast<int>(pairs.size());
  st.start_mean_ms = mean(s);
  st.start_std_ms = population_std(s);
  st.end_mean_ms = mean(e);
  st.end_std_ms = population_std(e);
  return st;
}

std::pair<std::vector<MatchedPair>, std::vector<MatchedPair>> split_long(std::span<const MatchedPair> pairs,
                                                                          double threshold_ms) {
  std::vector<MatchedPair> all(pairs.begin(), pairs.end()), lng;
  for (const auto& p : pairs) {
    if (p.truth.duration_ms() > threshold_ms) lng.push_back(p);
  }
  return {std::move(all), std::move(lng)};
}

EndpointErrorStats endpoint_std_error(const MatchResult& matched, double long_threshold_ms) {
  if (matched.pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "endpoint statistics: zero matched pairs");
  EndpointErrorStats st;
  const auto [all, lng] = split_long(matched.pairs, long_threshold_ms);
  st.all = partition_stats(all);
  if (!lng.empty()) st.long_partition = partition_stats(lng);
  st.long_threshold_ms = long_threshold_ms;
  st.unmatched_estimates = matched.unmatched_estimates;
  st.missed_truths = matched.missed_truths;
  return st;
}

RocPoint roc_point(std::span<const double> positive_scores, std::span<const double> negative_scores,
                   double threshold) {
  if (positive_scores.empty() || negative_scores.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "ROC needs both positive and negative streams");
  }
  RocPoint p;
  p.threshold = threshold;
  const auto fa = std::count_if(negative_scores.begin(), negative_scores.end(), [&](double s) { return s >= threshold; });
  const auto fr = std::count_if(positive_scores.begin(), positive_scores.end(), [&](double s) { return s < threshold; });
  p.far = static_cast<double>(fa) / static_cast<double>(negative_scores.size());
  p.frr = static_cast<double>(fr) / static_cast<double>(positive_scores.size());
  return p;
}

std::vector<RocPoint> far_sweep(std::span<const double> positive_scores, std::span<const double> negative_scores) {
  std::vector<double> t(positive_scores.begin(), positive_scores.end());
  t.insert(t.end(), negative_scores.begin(), negative_scores.end());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  std::vector<RocPoint> out;
  out.reserve(t.size());
  for (double th : t) out.push_back(roc_point(positive_scores, negative_scores, th));
  return out;
}

FrrAtFar frr_at_far(std::span<const double> positive_scores, std::span<const double> negative_scores,
                    double target_far) {
  FrrAtFar r;
  r.target_far = target_far;
  const auto sweep = far_sweep(positive_scores, negative_scores);
  for (const auto& p : sweep) {
    if (p.far <= target_far) {
      r.point = p;
      return r;
    }
  }
  r.attainable = false;
  r.point = sweep.back();
  return r;
}

}  // namespace kwsep::eval
