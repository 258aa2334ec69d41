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

#include "kwsep/eval/report.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>

#include "kwsep/error.hpp"

namespace kwsep::eval {

using nlohmann::json;

namespace {

json stats_json(const PartitionStats& s) {
  return {{"n", s.n},
          {"start_mean_ms", s.start_mean_ms},
          {"start_std_ms", s.start_std_ms},
          {"end_mean_ms", s.end_mean_ms},
          {"end_std_ms", s.end_std_ms}};
}

PartitionStats stats_from(const json& j) {
  PartitionStats s;
  s.n = j.at("n").get<int>();
  s.start_mean_ms = j.at("start_mean_ms").get<double>();
  s.start_std_ms = j.at("start_std_ms").get<double>();
  s.end_mean_ms = j.at("end_mean_ms").get<double>();
  s.end_std_ms = j.at("end_std_ms").get<double>();
  return s;
}

json roc_json(const RocPoint& p) { return {{"threshold", p.threshold}, {"far", p.far}, {"frr", p.frr}}; }

RocPoint roc_from(const json& j) {
  return {j.at("threshold").get<double>(), j.at("far").get<double>(), j.at("frr").get<double>()};
}

}  // namespace

json to_json(const EvalReport& r) {
  json methods = json::array();
  for (const auto& m : r.methods) {
    json e{{"name", m.name},
           {"method", m.method},
           {"model", m.model},
           {"all", stats_json(m.stats.all)},
           {"long", m.stats.long_partition ? stats_json(*m.stats.long_partition) : json(nullptr)},
           {"long_threshold_ms", m.stats.long_threshold_ms},
           {"unmatched_estimates", m.stats.unmatched_estimates},
           {"missed_truths", m.stats.missed_truths},
           {"n_estimates", m.n_estimates},
           {"n_fallback", m.n_fallback}};
    methods.push_back(std::move(e));
  }
  json detection = json::array();
  for (const auto& d : r.detection) {
    detection.push_back({{"model", d.model},
                         {"operating", roc_json(d.operating)},
                         {"target_far", d.at_target.target_far},
                         {"at_target", roc_json(d.at_target.point)},
                         {"target_attainable", d.at_target.attainable},
                         {"n_positive", d.n_positive},
                         {"n_negative", d.n_negative}});
  }
  json peaks = json::array();
  for (const auto& p : r.peak_order) {
    peaks.push_back({{"model", p.model}, {"n", p.n}, {"passed", p.passed}, {"rate", p.rate()}});
  }
  return {{"schema_version", r.schema_version},
          {"corpus_digest", r.corpus_digest},
          {"n_streams", r.n_streams},
          {"config", r.config},
          {"methods", methods},
          {"detection", detection},
          {"peak_order", peaks}};
}

EvalReport report_from_json(const json& j) {
  try {
    EvalReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kReportSchemaVersion) {
      throw Error(ErrorCode::kMalformedFile, "report schema_version " + std::to_string(r.schema_version) +
                                                 " is not supported (expected " +
                                                 std::to_string(kReportSchemaVersion) + ")");
    }
    r.corpus_digest = j.at("corpus_digest").get<std::string>();
    r.n_streams = j.at("n_streams").get<int>();
    r.config = j.at("config");
    for (const auto& e : j.at("methods")) {
      MethodReport m;
      m.name = e.at("name").get<std::string>();
      m.method = e.at("method").get<std::string>();
      m.model = e.at("model").get<std::string>();
      m.stats.all = stats_from(e.at("all"));
      if (!e.at("long").is_null()) m.stats.long_partition = stats_from(e.at("long"));
      m.stats.long_threshold_ms = e.at("long_threshold_ms").get<double>();
      m.stats.unmatched_estimates = e.at("unmatched_estimates").get<int>();
      m.stats.missed_truths = e.at("missed_truths").get<int>();
      m.n_estimates = e.at("n_estimates").get<int>();
      m.n_fallback = e.at("n_fallback").get<int>();
      r.methods.push_back(std::move(m));
    }
    for (const auto& e : j.at("detection")) {
      DetectionReport d;
      d.model = e.at("model").get<std::string>();
      d.operating = roc_from(e.at("operating"));
      d.at_target.target_far = e.at("target_far").get<double>();
      d.at_target.point = roc_from(e.at("at_target"));
      d.at_target.attainable = e.at("target_attainable").get<bool>();
      d.n_positive = e.at("n_positive").get<int>();
      d.n_negative = e.at("n_negative").get<int>();
      r.detection.push_back(std::move(d));
    }
    for (const auto& e : j.at("peak_order")) {
      r.peak_order.push_back({e.at("model").get<std::string>(), e.at("n").get<int>(), e.at("passed").get<int>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("report: ") + e.what());
  }
}

void write_report(const std::filesystem::path& path, const EvalReport& r) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  os << to_json(r).dump(2) << '\n';
}

EvalReport read_report(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

namespace {

void put_stats(std::ostream& os, const std::optional<PartitionStats>& s) {
  if (s) {
    os << ',' << s->n << ',' << s->start_mean_ms << ',' << s->start_std_ms << ',' << s->end_mean_ms << ','
       << s->end_std_ms;
  } else {
    os << ",,,,,";
  }
}

}  // namespace

void write_summary_csv(std::ostream& os, const EvalReport& r) {
  os << "name,method,model,n,start_mean_ms,start_std_ms,end_mean_ms,end_std_ms,"
        "long_n,long_start_mean_ms,long_start_std_ms,long_end_mean_ms,long_end_std_ms,"
        "unmatched_estimates,missed_truths,n_fallback\n"
     << std::setprecision(6);
  for (const auto& m : r.methods) {
    os << m.name << ',' << m.method << ',' << m.model;
    put_stats(os, m.stats.all);
    put_stats(os, m.stats.long_partition);
    os << ',' << m.stats.unmatched_estimates << ',' << m.stats.missed_truths << ',' << m.n_fallback << '\n';
  }
}

void write_errors_csv(std::ostream& os, std::span<const std::pair<std::string, std::vector<MatchedPair>>> rows) {
  os << "name,stream_id,true_start_ms,true_end_ms,start_error_ms,end_error_ms\n" << std::setprecision(9);
  for (const auto& [name, pairs] : rows) {
    for (const auto& p : pairs) {
      os << name << ',' << p.stream_id << ',' << p.truth.start_ms << ',' << p.truth.end_ms << ','
         << p.start_error_ms() << ',' << p.end_error_ms() << '\n';
    }
  }
}

void write_compare_csv(std::ostream& os, std::span<const std::string> labels, std::span<const EvalReport> reports) {
  if (labels.size() != reports.size()) throw Error(ErrorCode::kInvalidArgument, "one label per report");
  os << "report,name,n,start_std_ms,end_std_ms,long_n,long_start_std_ms,long_end_std_ms\n" << std::setprecision(6);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    for (const auto& m : reports[i].methods) {
      os << labels[i] << ',' << m.name << ',' << m.stats.all.n << ',' << m.stats.all.start_std_ms << ','
         << m.stats.all.end_std_ms;
      if (const auto& l = m.stats.long_partition) {
        os << ',' << l->n << ',' << l->start_std_ms << ',' << l->end_std_ms << '\n';
      } else {
        os << ",,,\n";
      }
    }
  }
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace kwsep::eval
