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

#include "kwsep/eval/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include "kwsep/config/json_io.hpp"
#include "kwsep/error.hpp"

namespace kwsep::eval {

void EvalConfig::validate() const {
  if (!target_far) throw ValidationError("eval.target_far", "required");
  if (!(*target_far >= 0 && *target_far <= 1)) throw ValidationError("eval.target_far", "must be in [0, 1]");
  if (!(long_threshold_ms > 0)) throw ValidationError("eval.long_threshold_ms", "must be > 0");
  if (!(match_window_ms > 0)) throw ValidationError("eval.match_window_ms", "must be > 0");
  for (const auto& m : methods) {
    try {
      stream::endpoint_method_from_string(m);
    } catch (const Error& e) {
      throw ValidationError("eval.methods", e.what());
    }
  }
}

const char* to_string(LongSplit s) { return s == LongSplit::kFixed ? "fixed" : "p90"; }

LongSplit long_split_from_string(const std::string& name) {
  if (name == "fixed") return LongSplit::kFixed;
  if (name == "p90") return LongSplit::kP90;
  throw ValidationError("eval.long_split", "unknown value '" + name + "' (fixed, p90)");
}

std::vector<stream::EndpointMethod> methods_for(const models::KwsModel& model, const EvalConfig& cfg) {
  using stream::EndpointMethod;
  if (cfg.methods.empty()) {
    switch (model.kind) {
      case models::ModelKind::kDetector: return {EndpointMethod::kConst};
      case models::ModelKind::kRegression:
        return {EndpointMethod::kConst, EndpointMethod::kRegressionThresCrossing, EndpointMethod::kRegressionLocalMax};
      case models::ModelKind::kMultiAligned: return {EndpointMethod::kAligned};
    }
  }
  const auto supported = stream::supported_methods(model);
  std::vector<EndpointMethod> out;
  for (const auto& name : cfg.methods) {
    const auto m = stream::endpoint_method_from_string(name);
    if (std::find(supported.begin(), supported.end(), m) != supported.end() &&
        std::find(out.begin(), out.end(), m) == out.end()) {
      out.push_back(m);
    }
  }
  return out;
}

double stream_score(const stream::PosteriorTrace& smoothed, std::span<const data::Interval> truth, bool positive,
                    double match_window_ms) {
  double best = 0.0;
  for (std::size_t i = 0; i < smoothed.length(); ++i) {
    if (positive) {
      const double center = smoothed.time_ms(i) - smoothed.window_ms / 2;
      const bool near = std::any_of(truth.begin(), truth.end(), [&](const data::Interval& iv) {
        return std::abs(center - iv.center_ms()) <= match_window_ms;
      });
      if (!near) continue;
    }
    best = std::max(best, static_cast<double>(smoothed.at(i, 0)));
  }
  return best;
}

std::string corpus_digest(std::span<const data::FeaturedRecord> corpus) {
  std::uint64_t h = fnv1a64("");
  char buf[64];
  for (const auto& r : corpus) {
    h = fnv1a64(r.id, h);
    h = fnv1a64(data::to_string(r.label), h);
    std::snprintf(buf, sizeof buf, "|%d", r.features.n_frames);
    h = fnv1a64(buf, h);
    for (const auto& iv : r.keyword_intervals) {
      std::snprintf(buf, sizeof buf, "|%.3f,%.3f", iv.start_ms, iv.end_ms);
      h = fnv1a64(buf, h);
    }
    h = fnv1a64("\n", h);
  }
  return hex64(h);
}

namespace {

double resolve_long_threshold(std::span<const data::FeaturedRecord> corpus, const EvalConfig& cfg) {
  if (cfg.long_split == LongSplit::kFixed) return cfg.long_threshold_ms;
  std::vector<double> d;
  for (const auto& r : corpus) {
    for (const auto& iv : r.keyword_intervals) d.push_back(iv.duration_ms());
  }
  if (d.empty()) throw Error(ErrorCode::kInvalidArgument, "p90 long split needs at least one keyword interval");
  return quantile(std::move(d), 0.9);
}

struct MethodRows {
  std::string model;
  stream::EndpointMethod method;
  std::vector<StreamEstimates> streams;
  int n_estimates = 0;
  int n_fallback = 0;
};

}  // namespace

EvalResult evaluate(std::span<const EvalModel> models, std::span<const data::FeaturedRecord> corpus,
                    const stream::EndpointerConfig& endpointer, const EvalConfig& cfg) {
  cfg.validate();
  endpointer.validate();
  if (models.empty()) throw Error(ErrorCode::kInvalidArgument, "evaluation needs at least one model");
  if (corpus.empty()) throw Error(ErrorCode::kInvalidArgument, "evaluation corpus is empty");

  std::vector<std::vector<stream::EndpointMethod>> per_model;
  std::set<stream::EndpointMethod> covered;
  for (const auto& m : models) {
    if (m.model == nullptr) throw Error(ErrorCode::kInvalidArgument, "model '" + m.label + "' is null");
    per_model.push_back(methods_for(*m.model, cfg));
    covered.insert(per_model.back().begin(), per_model.back().end());
  }
  for (const auto& name : cfg.methods) {
    if (!covered.count(stream::endpoint_method_from_string(name))) {
      throw Error(ErrorCode::kModelKindMismatch,
                  "model kind mismatch: no given checkpoint supports method " + name);
    }
  }

  const double long_ms = resolve_long_threshold(corpus, cfg);
  EvalResult result;
  auto& report = result.report;
  report.corpus_digest = corpus_digest(corpus);
  report.n_streams = static_cast<int>(corpus.size());
  report.config = {{"endpointer", config::to_json(endpointer)},
                   {"eval", config::to_json(cfg)},
                   {"long_threshold_ms", long_ms},
                   {"models", nlohmann::json::array()}};
  for (const auto& m : models) report.config["models"].push_back(m.label);

  std::vector<MethodRows> rows;
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    const auto& model = *models[mi].model;
    const auto& methods = per_model[mi];
    const std::size_t first_row = rows.size();
    for (auto meth : methods) rows.push_back({models[mi].label, meth, {}, 0, 0});

    std::vector<double> pos_scores, neg_scores;
    PeakOrder peaks{models[mi].label, 0, 0};
    const bool has_aligned =
        std::find(methods.begin(), methods.end(), stream::EndpointMethod::kAligned) != methods.end();

    for (const auto& rec : corpus) {
      const bool positive = rec.label == data::StreamLabel::kPositive;
      auto res = stream::endpoint_traces(model, stream::sliding_window_infer(model, rec.features), endpointer, methods);
      (positive ? pos_scores : neg_scores)
          .push_back(stream_score(res.smoothed, rec.keyword_intervals, positive, cfg.match_window_ms));

      for (std::size_t k = 0; k < methods.size(); ++k) {
        auto& row = rows[first_row + k];
        StreamEstimates se{rec.id, rec.keyword_intervals, {}};
        for (const auto& e : res.estimates) {
          if (e.method != methods[k]) continue;
          se.estimates.push_back({e.start_ms, e.end_ms});
          ++row.n_estimates;
          if (e.fallback) ++row.n_fallback;
        }
        row.streams.push_back(std::move(se));
      }

      if (has_aligned && positive) {
        for (const auto& truth : rec.keyword_intervals) {
          const stream::EndpointEstimate* best = nullptr;
          for (const auto& e : res.estimates) {
            if (e.method != stream::EndpointMethod::kAligned || !e.start_peak_ms) continue;
            const double dist = std::abs(e.center_ms() - truth.center_ms());
            if (dist > cfg.match_window_ms) continue;
            if (best == nullptr || dist < std::abs(best->center_ms() - truth.center_ms())) best = &e;
          }
          if (best == nullptr) continue;
          ++peaks.n;
          if (*best->start_peak_ms <= *best->end_peak_ms) ++peaks.passed;
        }
      }
    }

    if (has_aligned) report.peak_order.push_back(peaks);
    if (!pos_scores.empty() && !neg_scores.empty()) {
      DetectionReport d;
      d.model = models[mi].label;
      d.operating = roc_point(pos_scores, neg_scores, endpointer.threshold);
      d.at_target = frr_at_far(pos_scores, neg_scores, *cfg.target_far);
      d.n_positive = static_cast<int>(pos_scores.size());
      d.n_negative = static_cast<int>(neg_scores.size());
      report.detection.push_back(d);
    }
  }

  std::map<stream::EndpointMethod, int> method_count;
  for (const auto& r : rows) ++method_count[r.method];
  for (auto& r : rows) {
    MethodReport m;
    m.method = stream::to_string(r.method);
    m.name = method_count[r.method] > 1 ? m.method + "@" + r.model : m.method;
    m.model = r.model;
    const auto matched = match_estimates(r.streams, cfg.match_window_ms);
    if (matched.pairs.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "method " + m.name + ": no estimate matched a ground-truth keyword");
    }
    m.stats = endpoint_std_error(matched, long_ms);
    m.n_estimates = r.n_estimates;
    m.n_fallback = r.n_fallback;
    result.pairs.emplace_back(m.name, matched.pairs);
    report.methods.push_back(std::move(m));
  }
  return result;
}

}  // namespace kwsep::eval
