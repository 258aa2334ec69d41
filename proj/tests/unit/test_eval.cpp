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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "kwsep/eval/harness.hpp"
#include "kwsep/eval/metrics.hpp"
#include "kwsep/eval/report.hpp"

using namespace kwsep;
using namespace kwsep::eval;

namespace {

MatchedPair pair_of(double start_err, double end_err, double dur = 600.0, double start = 1000.0) {
  MatchedPair p;
  p.stream_id = "s";
  p.truth = {start, start + dur};
  p.estimate = {start + start_err, start + dur + end_err};
  return p;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("population std and quantile") {
  std::vector<double> x{-10, 0, 10};
  CHECK(population_std(x) == doctest::Approx(std::sqrt(200.0 / 3.0)).epsilon(1e-14));
  CHECK(mean(x) == 0.0);
  std::vector<double> one{3.5};
  CHECK(population_std(one) == 0.0);
  CHECK(quantile({900, 500, 700}, 0.9) == doctest::Approx(860.0));
  CHECK(quantile({900, 500, 700}, 0.5) == 700.0);
  CHECK(quantile({4, 1}, 0.0) == 1.0);
  CHECK(quantile({4, 1}, 1.0) == 4.0);
}

TEST_CASE("partition stats") {
  std::vector<MatchedPair> three{pair_of(-10, -10), pair_of(0, 0), pair_of(10, 10)};
  auto s = partition_stats(three);
  CHECK(s.n == 3);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", s.start_std_ms);
  CHECK(std::string(buf) == "8.1650");
  CHECK(s.end_std_ms == s.start_std_ms);

  std::vector<MatchedPair> exact{pair_of(0, 0), pair_of(0, 0, 800)};
  CHECK(partition_stats(exact).start_std_ms == 0.0);
  // A constant bias moves the mean, not the std.
  std::vector<MatchedPair> shifted{pair_of(40, -30), pair_of(50, -20), pair_of(60, -10)};
  auto sh = partition_stats(shifted);
  CHECK(sh.start_mean_ms == doctest::Approx(50.0));
  CHECK(sh.start_std_ms == doctest::Approx(s.start_std_ms));
  CHECK(sh.end_mean_ms == doctest::Approx(-20.0));
  CHECK_THROWS_AS(partition_stats(std::vector<MatchedPair>{}), Error);
}

TEST_CASE("long partition") {
  std::vector<MatchedPair> p{pair_of(0, 0, 500), pair_of(0, 0, 700), pair_of(10, -10, 900)};
  auto [all, lng] = split_long(p, 800);
  CHECK(all.size() == 3);
  REQUIRE(lng.size() == 1);
  CHECK(lng[0].truth.duration_ms() == 900);
  CHECK(split_long(p, 900).second.empty());  // strictly longer

  MatchResult m;
  m.pairs = p;
  auto st = endpoint_std_error(m, 860);
  REQUIRE(st.long_partition);
  CHECK(st.long_partition->n == 1);
  CHECK(st.long_threshold_ms == 860);
  auto none = endpoint_std_error(m, 2000);
  CHECK_FALSE(none.long_partition.has_value());
}

TEST_CASE("matching") {
  StreamEstimates a{"a", {{1000, 1600}}, {{3000, 3600}, {1050, 1620}, {900, 1500}}};
  StreamEstimates b{"b", {{500, 1100}}, {}};
  StreamEstimates c{"c", {}, {{100, 400}}};
  std::vector<StreamEstimates> streams{a, b, c};
  auto m = match_estimates(streams, 1000);
  REQUIRE(m.pairs.size() == 1);
  // Centers: truth 1300; candidates 1335 and 1200 -> 1335 is nearer.
  CHECK(m.pairs[0].estimate == data::Interval{1050, 1620});
  CHECK(m.unmatched_estimates == 3);
  CHECK(m.missed_truths == 1);

  SUBCASE("estimates beyond the window are not matched") {
    std::vector<StreamEstimates> far{{"f", {{1000, 1600}}, {{2400, 2800}}}};
    auto r = match_estimates(far, 1000);
    CHECK(r.pairs.empty());
    CHECK(r.missed_truths == 1);
  }
  SUBCASE("equidistant estimates resolve on start, independent of order") {
    StreamEstimates x{"x", {{1000, 1600}}, {{1100, 1700}, {900, 1500}}};
    StreamEstimates y{"x", {{1000, 1600}}, {{900, 1500}, {1100, 1700}}};
    auto rx = match_estimates(std::vector<StreamEstimates>{x}, 1000);
    auto ry = match_estimates(std::vector<StreamEstimates>{y}, 1000);
    REQUIRE(rx.pairs.size() == 1);
    CHECK(rx.pairs == ry.pairs);
    CHECK(rx.pairs[0].estimate.start_ms == 900);
  }
  SUBCASE("one estimate serves one truth") {
    std::vector<StreamEstimates> two{{"t", {{1000, 1400}, {1300, 1700}}, {{1150, 1550}}}};
    auto r = match_estimates(two, 1000);
    CHECK(r.pairs.size() == 1);
    CHECK(r.missed_truths == 1);
  }
}

TEST_CASE("ROC sweep") {
  std::vector<double> pos{0.9, 0.8, 0.4};
  std::vector<double> neg{0.1, 0.4, 0.3, 0.05};
  auto p = roc_point(pos, neg, 0.4);
  CHECK(p.far == 0.25);
  CHECK(p.frr == 0.0);
  auto q = roc_point(pos, neg, 0.41);
  CHECK(q.far == 0.0);
  CHECK(q.frr == doctest::Approx(1.0 / 3.0));

  auto sweep = far_sweep(pos, neg);
  CHECK(sweep.size() == 6);  // distinct scores
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    CHECK(sweep[i].threshold > sweep[i - 1].threshold);
    CHECK(sweep[i].far <= sweep[i - 1].far);
    CHECK(sweep[i].frr >= sweep[i - 1].frr);
  }

  auto t = frr_at_far(pos, neg, 0.0);
  CHECK(t.attainable);
  CHECK(t.point.threshold == 0.8);
  CHECK(t.point.frr == doctest::Approx(1.0 / 3.0));

  std::vector<double> sep_pos{0.9, 0.8}, sep_neg{0.1, 0.2};
  auto s = frr_at_far(sep_pos, sep_neg, 0.0);
  CHECK(s.point.far == 0.0);
  CHECK(s.point.frr == 0.0);

  std::vector<double> eq{0.5, 0.5};
  auto e = frr_at_far(eq, eq, 0.1);
  CHECK_FALSE(e.attainable);
  CHECK(e.point.threshold == 0.5);
  CHECK(e.point.far == 1.0);

  // Score order does not matter.
  std::vector<double> pos_r(pos.rbegin(), pos.rend()), neg_r(neg.rbegin(), neg.rend());
  CHECK(far_sweep(pos_r, neg_r) == sweep);
}

TEST_CASE("stream score counts only near-truth points on positives") {
  stream::PosteriorTrace t;
  t.names = {"center", "non"};
  t.window_ms = 1000;
  t.start_ms = 1000;
  for (int i = 0; i < 200; ++i) {
    const float v = i == 20 ? 0.95f : (i == 150 ? 0.7f : 0.1f);
    t.values.push_back(v);
    t.values.push_back(1 - v);
  }
  // Peak at t = 1200 implies center 700; t = 2500 implies 2000.
  std::vector<data::Interval> truth{{1700, 2300}};
  CHECK(stream_score(t, truth, true, 1000) == doctest::Approx(0.7));
  CHECK(stream_score(t, truth, true, 2000) == doctest::Approx(0.95));
  CHECK(stream_score(t, {}, false, 1000) == doctest::Approx(0.95));
}

TEST_CASE("report JSON round trip and golden file") {
  const std::filesystem::path fx = KWSEP_FIXTURES;
  auto golden = read_report(fx / "report_v1.json");
  REQUIRE(golden.methods.size() == 2);
  CHECK(golden.methods[0].name == "const@det");
  CHECK_FALSE(golden.methods[0].stats.long_partition.has_value());
  CHECK(golden.methods[1].stats.long_partition->end_mean_ms == -20.0);
  CHECK(golden.detection[0].at_target.point.threshold == 0.3);
  CHECK(golden.peak_order[0].rate() == 0.5);
  CHECK(golden.config["eval"]["target_far"] == 0.05);

  auto dir = test::scratch_dir("report");
  write_report(dir / "r.json", golden);
  CHECK(read_report(dir / "r.json") == golden);
  CHECK(report_from_json(to_json(golden)) == golden);

  auto j = to_json(golden);
  j["schema_version"] = 2;
  CHECK(test::error_code_of([&] { report_from_json(j); }) == ErrorCode::kMalformedFile);
  j = to_json(golden);
  j.erase("methods");
  CHECK(test::error_code_of([&] { report_from_json(j); }) == ErrorCode::kMalformedFile);
  CHECK(test::error_code_of([&] { read_report(dir / "absent.json"); }) == ErrorCode::kMissingFile);
  std::filesystem::remove_all(dir);
}

TEST_CASE("CSV writers") {
  auto golden = read_report(std::filesystem::path(KWSEP_FIXTURES) / "report_v1.json");
  std::ostringstream s;
  write_summary_csv(s, golden);
  const auto summary = s.str();
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 3);
  CHECK(summary.find("const@det,const,det,2,-5,15,5,25,,,,,,1,0,0\n") != std::string::npos);

  std::ostringstream c;
  const std::vector<std::string> labels{"a", "b"};
  const std::vector<EvalReport> reports{golden, golden};
  write_compare_csv(c, labels, reports);
  const auto cmp = c.str();
  CHECK(std::count(cmp.begin(), cmp.end(), '\n') == 5);
  CHECK(cmp.find("b,aligned@multi,2,10,20,1,0,0\n") != std::string::npos);
  const std::vector<std::string> one{"a"};
  CHECK_THROWS_AS(write_compare_csv(c, one, reports), Error);

  std::ostringstream e;
  std::vector<std::pair<std::string, std::vector<MatchedPair>>> rows{{"x", {pair_of(5, -5)}}};
  write_errors_csv(e, rows);
  CHECK(e.str() == "name,stream_id,true_start_ms,true_end_ms,start_error_ms,end_error_ms\nx,s,1000,1600,5,-5\n");
}

TEST_CASE("FNV-1a digest") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
  CHECK(hex64(fnv1a64("foobar")) == "85944171f73967e8");
}

TEST_CASE("eval config") {
  EvalConfig c;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.target_far = 0.05;
  CHECK_NOTHROW(c.validate());
  CHECK(long_split_from_string("p90") == LongSplit::kP90);
  CHECK_THROWS_AS(long_split_from_string("p50"), ValidationError);
}

}  // TEST_SUITE
