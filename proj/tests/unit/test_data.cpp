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

#include "helpers.hpp"
#include "kwsep/data/corpus.hpp"
#include "kwsep/data/manifest.hpp"
#include "kwsep/data/windows.hpp"

using namespace kwsep;
using namespace kwsep::data;
using models::AlignmentClass;

namespace {

std::vector<FeaturedRecord> small_corpus(std::uint64_t seed) {
  auto records = generate_corpus(SyntheticKeywordSpec{}, WindowConfig{}, 4, 4, seed);
  auto featured = extract_features(records, audio::FeatureConfig{});
  normalize_in_place(featured, corpus_stats(featured));
  return featured;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("synthesis is a pure function of the seed") {
  const SyntheticKeywordSpec spec;
  const WindowConfig win;
  auto a = synth_stream(spec, win, 42, true);
  auto b = synth_stream(spec, win, 42, true);
  auto c = synth_stream(spec, win, 43, true);
  CHECK(a.audio.samples == b.audio.samples);
  CHECK(a.keyword_intervals == b.keyword_intervals);
  CHECK(a.audio.samples != c.audio.samples);
  CHECK(a.audio.samples.size() == 32000);
}

TEST_CASE("positives carry one feasible keyword; negatives carry none") {
  const SyntheticKeywordSpec spec;
  const WindowConfig win;
  for (std::uint64_t s = 0; s < 40; ++s) {
    auto pos = synth_stream(spec, win, s, true);
    REQUIRE(pos.keyword_intervals.size() == 1);
    const auto kw = pos.keyword_intervals[0];
    CHECK(kw.duration_ms() >= spec.min_ms - 1e-9);
    CHECK(kw.duration_ms() <= spec.max_ms + 1e-9);
    const auto [lo, hi] = feasible_start_range(spec, win, kw.duration_ms());
    CHECK(kw.start_ms >= lo - 1e-9);
    CHECK(kw.start_ms <= hi + 1e-9);
    auto neg = synth_stream(spec, win, s, false);
    CHECK(neg.label == StreamLabel::kNegative);
    CHECK(neg.keyword_intervals.empty());
  }
}

TEST_CASE("feasible range closes when the stream is too short") {
  SyntheticKeywordSpec spec;
  const WindowConfig win;
  // Center and post-center-start windows need w + 2*jitter around the keyword.
  auto [lo, hi] = feasible_start_range(spec, win, 600);
  CHECK(lo == doctest::Approx(555.0));
  CHECK(hi <= spec.stream_ms - 500.0 - 50.0);
  spec.stream_ms = 1200;
  auto [lo2, hi2] = feasible_start_range(spec, win, 900);
  CHECK(lo2 > hi2);
  CHECK(test::error_code_of([&] { synth_stream(spec, win, 1, true); }) == ErrorCode::kInfeasible);
}

TEST_CASE("keyword waveform has unit RMS and shuffling changes it") {
  const SyntheticKeywordSpec spec;
  auto kw = synth_keyword(spec, 5, 600, false);
  CHECK(kw.size() == 9600);
  double ss = 0;
  for (float v : kw) ss += static_cast<double>(v) * v;
  CHECK(std::sqrt(ss / kw.size()) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(synth_keyword(spec, 5, 600, true) != kw);
}

TEST_CASE("anchors and relative offsets") {
  const WindowConfig win;
  const Interval kw{800, 1400};
  CHECK(alignment_anchor(AlignmentClass::kCenter, kw, win).keyword_point_ms == 1100);
  CHECK(alignment_anchor(AlignmentClass::kPostCenterStart, kw, win).keyword_point_ms == 800);
  auto end = alignment_anchor(AlignmentClass::kEndAligned, kw, win);
  CHECK(end.keyword_point_ms == 1400);
  CHECK(end.window_offset_ms == 950);
  CHECK(test::error_code_of([&] { alignment_anchor(AlignmentClass::kNegative, kw, win); }) ==
        ErrorCode::kInvalidArgument);
  auto r = relative_offsets(kw, 600, 1000);
  CHECK(r.start_rel == doctest::Approx(0.2));
  CHECK(r.end_rel == doctest::Approx(0.8));
}

TEST_CASE("every cut window satisfies its alignment rule") {
  auto corpus = small_corpus(11);
  const WindowConfig win;
  Rng rng(3);
  int cut = 0;
  for (const auto& rec : corpus) {
    for (int k = 0; k < 4; ++k) {
      const auto a = static_cast<AlignmentClass>(k);
      if ((a == AlignmentClass::kNegative) != (rec.label == StreamLabel::kNegative)) continue;
      for (int rep = 0; rep < 10; ++rep) {
        auto ex = cut_example(rec, a, win, rng);
        CHECK(ex.n_frames == 100);
        CHECK(ex.features.size() == 100u * 64u);
        CHECK(alignment_consistent(ex, win));
        CHECK(std::abs(ex.jitter_ms) <= win.jitter_ms + win.hop_ms / 2 + 1e-9);
        CHECK(ex.offsets.has_value() == (a != AlignmentClass::kNegative));
        ++cut;
      }
    }
  }
  CHECK(cut == 4 * 30 + 4 * 10);
}

TEST_CASE("a displaced window fails the consistency check") {
  auto corpus = small_corpus(12);
  const WindowConfig win;
  Rng rng(4);
  auto ex = cut_example(corpus[0], AlignmentClass::kCenter, win, rng);
  ex.window_start_ms += 200;
  CHECK_FALSE(alignment_consistent(ex, win));
}

TEST_CASE("sampler composition follows the mode's die") {
  auto d = alignment_distribution(SamplerMode::kMultiAligned);
  CHECK(d[0] == 0.25);
  CHECK(d[1] == 0.125);
  CHECK(d[2] == 0.125);
  CHECK(d[3] == 0.5);
  auto det = alignment_distribution(SamplerMode::kDetector);
  CHECK(det[1] == 0);
  CHECK(det[2] == 0);
  auto corpus = small_corpus(13);
  MinibatchSampler s(corpus, SamplerMode::kDetector, WindowConfig{}, 9);
  for (int i = 0; i < 200; ++i) {
    const auto a = s.draw_alignment();
    CHECK((a == AlignmentClass::kCenter || a == AlignmentClass::kNegative));
  }
  MinibatchSampler s1(corpus, SamplerMode::kMultiAligned, WindowConfig{}, 9);
  MinibatchSampler s2(corpus, SamplerMode::kMultiAligned, WindowConfig{}, 9);
  auto b1 = s1.next(8);
  auto b2 = s2.next(8);
  for (int i = 0; i < 8; ++i) {
    CHECK(b1[i].features == b2[i].features);
    CHECK(b1[i].alignment == b2[i].alignment);
  }
  auto t = stack_windows(b1);
  CHECK(t.shape() == nn::Shape{8, 1, 100, 64});
}

TEST_CASE("corpus ids, manifest round trip and reload") {
  const SyntheticKeywordSpec spec;
  auto recs = generate_corpus(spec, WindowConfig{}, 2, 3, 21);
  REQUIRE(recs.size() == 5);
  CHECK(recs[0].id == "pos_000000");
  CHECK(recs[4].id == "neg_000002");
  // Records are independent of corpus size.
  auto bigger = generate_corpus(spec, WindowConfig{}, 3, 3, 21);
  CHECK(bigger[1].audio.samples == recs[1].audio.samples);

  auto dir = test::scratch_dir("corpus");
  write_corpus(dir, recs);
  auto entries = read_manifest(manifest_path(dir));
  REQUIRE(entries.size() == 5);
  CHECK(entries[0].intervals == recs[0].keyword_intervals);
  CHECK(entries[0].path == "wav/pos_000000.wav");
  auto back = load_corpus(dir);
  REQUIRE(back.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(back[i].id == recs[i].id);
    CHECK(back[i].label == recs[i].label);
    REQUIRE(back[i].audio.samples.size() == recs[i].audio.samples.size());
    float worst = 0;
    for (std::size_t k = 0; k < recs[i].audio.samples.size(); ++k) {
      worst = std::max(worst, std::abs(back[i].audio.samples[k] - recs[i].audio.samples[k]));
    }
    CHECK(worst <= 1.0f / 32768.0f + 1e-7f);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("fixture manifests") {
  const std::filesystem::path fx = KWSEP_FIXTURES;
  auto two = read_manifest(fx / "manifest_two.jsonl");
  REQUIRE(two.size() == 2);
  CHECK(two[0].label == StreamLabel::kPositive);
  CHECK(two[0].intervals == std::vector<Interval>{{612.5, 1248.75}});
  CHECK(two[1].intervals.empty());
  try {
    read_manifest(fx / "manifest_bad.jsonl");
    FAIL("expected a malformed-file error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMalformedFile);
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  CHECK(test::error_code_of([&] { read_manifest(fx / "absent.jsonl"); }) == ErrorCode::kMissingFile);
}

TEST_CASE("median duration and held-out split") {
  std::vector<StreamRecord> recs(3);
  recs[0].keyword_intervals = {{0, 500}};
  recs[1].keyword_intervals = {{0, 700}, {1000, 1900}};
  recs[2].keyword_intervals = {};
  CHECK(median_duration_ms(recs) == 700);

  std::vector<FeaturedRecord> f;
  for (int i = 0; i < 10; ++i) {
    FeaturedRecord r;
    r.id = (i < 6 ? "pos_" : "neg_") + std::to_string(i);
    r.label = i < 6 ? StreamLabel::kPositive : StreamLabel::kNegative;
    f.push_back(r);
  }
  auto split = split_holdout(f, 0.2);
  CHECK(split.train.size() + split.heldout.size() == 10);
  // ceil(0.2 * 6) = 2 positives, ceil(0.2 * 4) = 1 negative, taken from the end.
  REQUIRE(split.heldout.size() == 3);
  CHECK(split.heldout[0].id == "pos_4");
  CHECK(split.heldout[1].id == "pos_5");
  CHECK(split.heldout[2].id == "neg_9");
  CHECK(split_holdout(f, 0.0).heldout.empty());
}

}  // TEST_SUITE
