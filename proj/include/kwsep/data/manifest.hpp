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

#include <filesystem>
#include <string>
#include <vector>

#include "kwsep/data/synth.hpp"

namespace kwsep::data {

// One JSON-lines row: {"id", "path", "label", "intervals": [[start_ms, end_ms], ...]}.
// `path` is relative to the manifest's directory.
struct ManifestEntry {
  std::string id;
  std::string path;
  StreamLabel label = StreamLabel::kNegative;
  std::vector<Interval> intervals;

  bool operator==(const ManifestEntry&) const = default;
};

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

// Throws kMissingFile, or kMalformedFile naming the offending line.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

}  // namespace kwsep::data
