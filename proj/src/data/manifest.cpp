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

#include "kwsep/data/manifest.hpp"

#include <fstream>
#include <json.hpp>

#include "kwsep/error.hpp"

namespace kwsep::data {

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  for (const auto& e : entries) {
    nlohmann::json row;
    row["id"] = e.id;
    row["path"] = e.path;
    row["label"] = to_string(e.label);
    row["intervals"] = nlohmann::json::array();
    for (const auto& iv : e.intervals) row["intervals"].push_back({iv.start_ms, iv.end_ms});
    out << row.dump() << '\n';
  }
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto row = nlohmann::json::parse(line);
      ManifestEntry e;
      e.id = row.at("id").get<std::string>();
      e.path = row.at("path").get<std::string>();
      e.label = stream_label_from_string(row.at("label").get<std::string>());
      for (const auto& iv : row.at("intervals")) {
        Interval interval{iv.at(0).get<double>(), iv.at(1).get<double>()};
        if (!(interval.end_ms > interval.start_ms)) {
          throw Error(ErrorCode::kMalformedFile, "interval end must exceed start");
        }
        e.intervals.push_back(interval);
      }
      entries.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw Error(ErrorCode::kMalformedFile,
                  path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return entries;
}

}  // namespace kwsep::data
