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
#include <span>
#include <vector>

#include "kwsep/audio/lfbe.hpp"
#include "kwsep/data/manifest.hpp"
#include "kwsep/data/windows.hpp"

namespace kwsep::data {

// Ids are "pos_000000", "neg_000000", ...; each record derives its own seed
// from (seed, index) so generation order does not matter.
std::vector<StreamRecord> generate_corpus(const SyntheticKeywordSpec& spec, const WindowConfig& window,
                                          int n_positive, int n_negative, std::uint64_t seed);

// Writes <dir>/wav/<id>.wav plus <dir>/manifest.jsonl.
void write_corpus(const std::filesystem::path& dir, const std::vector<StreamRecord>& records);

// Reads the manifest and every WAV it references.
std::vector<StreamRecord> load_corpus(const std::filesystem::path& dir);

std::filesystem::path manifest_path(const std::filesystem::path& corpus_dir);

// Raw (unnormalized) features for each record.
std::vector<FeaturedRecord> extract_features(std::span<const StreamRecord> records, const audio::FeatureConfig& cfg);

audio::FeatureStats corpus_stats(std::span<const FeaturedRecord> records);

void normalize_in_place(std::vector<FeaturedRecord>& records, const audio::FeatureStats& stats);

// Median ground-truth keyword duration across all intervals.
double median_duration_ms(std::span<const StreamRecord> records);
double median_duration_ms(std::span<const FeaturedRecord> records);

// Deterministic train/held-out split: the last `fraction` of positives and
// of negatives (in corpus order) are held out, at least one of each when
// the fraction is positive.
struct Split {
  std::vector<FeaturedRecord> train;
  std::vector<FeaturedRecord> heldout;
};
Split split_holdout(std::vector<FeaturedRecord> records, double fraction);

}  // namespace kwsep::data
