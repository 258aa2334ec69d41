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

#include "kwsep/data/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "kwsep/audio/wav.hpp"
#include "kwsep/error.hpp"

namespace kwsep::data {
namespace {

constexpr std::uint64_t kNegativeSeedBase = 1ull << 32;

std::string make_id(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%06d", prefix, i);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorCode::kInvalidArgument, "median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<StreamRecord> generate_corpus(const SyntheticKeywordSpec& spec, const WindowConfig& window,
                                          int n_positive, int n_negative, std::uint64_t seed) {
  std::vector<StreamRecord> out;
  out.reserve(static_cast<std::size_t>(n_positive + n_negative));
  for (int i = 0; i < n_positive; ++i) {
    out.push_back(synth_stream(spec, window, derive_seed(seed, static_cast<std::uint64_t>(i)), true, make_id("pos", i)));
  }
  for (int i = 0; i < n_negative; ++i) {
    out.push_back(synth_stream(spec, window, derive_seed(seed, kNegativeSeedBase + static_cast<std::uint64_t>(i)),
                               false, make_id("neg", i)));
  }
  return out;
}

std::filesystem::path manifest_path(const std::filesystem::path& corpus_dir) { return corpus_dir / "manifest.jsonl"; }

void write_corpus(const std::filesystem::path& dir, const std::vector<StreamRecord>& records) {
  std::filesystem::create_directories(dir / "wav");
  std::vector<ManifestEntry> entries;
  entries.reserve(records.size());
  for (const auto& r : records) {
    const std::string rel = "wav/" + r.id + ".wav";
    audio::write_wav(dir / rel, r.audio);
    entries.push_back({r.id, rel, r.label, r.keyword_intervals});
  }
  write_manifest(manifest_path(dir), entries);
}

std::vector<StreamRecord> load_corpus(const std::filesystem::path& dir) {
  const auto entries = read_manifest(manifest_path(dir));
  std::vector<StreamRecord> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    StreamRecord r;
    r.id = e.id;
    r.label = e.label;
    r.keyword_intervals = e.intervals;
    r.audio = audio::read_wav(dir / e.path);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<FeaturedRecord> extract_features(std::span<const StreamRecord> records, const audio::FeatureConfig& cfg) {
  std::vector<FeaturedRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back({r.id, r.label, r.keyword_intervals, audio::lfbe(r.audio, cfg)});
  }
  return out;
}

audio::FeatureStats corpus_stats(std::span<const FeaturedRecord> records) {
  audio::FeatureStatsAccumulator acc;
  for (const auto& r : records) acc.add(r.features);
  return acc.finish();
}

void normalize_in_place(std::vector<FeaturedRecord>& records, const audio::FeatureStats& stats) {
  for (auto& r : records) r.features = audio::normalize(r.features, stats);
}

double median_duration_ms(std::span<const StreamRecord> records) {
  std::vector<double> d;
  for (const auto& r : records)
    for (const auto& iv : r.keyword_intervals) d.push_back(iv.duration_ms());
  return median(std::move(d));
}

double median_duration_ms(std::span<const FeaturedRecord> records) {
  std::vector<double> d;
  for (const auto& r : records)
    for (const auto& iv : r.keyword_intervals) d.push_back(iv.duration_ms());
  return median(std::move(d));
}

Split split_holdout(std::vector<FeaturedRecord> records, double fraction) {
  if (!(fraction >= 0 && fraction < 1)) throw ValidationError("holdout_fraction", "must be in [0, 1)");
  Split out;
  for (auto label : {StreamLabel::kPositive, StreamLabel::kNegative}) {
    std::vector<FeaturedRecord*> part;
    for (auto& r : records) {
      if (r.label == label) part.push_back(&r);
    }
    auto n_held = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(part.size())));
    if (part.size() < 2) n_held = 0;
    const std::size_t n_train = part.size() - n_held;
    for (std::size_t i = 0; i < part.size(); ++i) {
      (i < n_train ? out.train : out.heldout).push_back(std::move(*part[i]));
    }
  }
  return out;
}

}  // namespace kwsep::data
