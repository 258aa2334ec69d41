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
#include <map>
#include <json.hpp>
#include <string>
#include <vector>

#include "kwsep/nn/network.hpp"

namespace kwsep::nn {

// Checkpoint file layout (version 1):
//
//   "KWSEPCKPT1\n"                 11-byte magic
//   uint64 little-endian           length of the JSON header in bytes
//   JSON header                    architecture, tensor directory, metadata
//   binary appendix                float32 little-endian tensor blobs
//
// The header's "tensors" array lists {name, role, shape, offset, count}
// with offsets relative to the start of the appendix. Roles are "value",
// "buffer", "adam_m" and "adam_v". Main-path parameters come first, in layer
// order, so a network built on another network's main path stores those
// parameters under identical names.
inline constexpr int kCheckpointVersion = 1;

nlohmann::json layer_spec_to_json(const LayerSpec& spec);
LayerSpec layer_spec_from_json(const nlohmann::json& j);

struct Checkpoint {
  Network<float> network;
  nlohmann::json metadata;
  bool has_optimizer_state = false;
};

// Serializes to bytes; identical inputs give identical bytes.
std::string encode_checkpoint(const Network<float>& net, const nlohmann::json& metadata,
                              bool include_optimizer_state);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Network<float>& net, const nlohmann::json& metadata,
                     bool include_optimizer_state = false);
// Throws kMissingFile or kMalformedFile (including truncation).
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Raw blob bytes per "<name>:<role>", for byte-level comparisons.
std::map<std::string, std::string> checkpoint_tensor_bytes(const std::string& bytes);

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::string& bytes);

}  // namespace kwsep::nn
