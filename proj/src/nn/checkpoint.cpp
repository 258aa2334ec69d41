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

#include "kwsep/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "kwsep/error.hpp"

namespace kwsep::nn {
namespace {

using nlohmann::json;

constexpr char kMagic[] = "KWSEPCKPT1\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

static_assert(std::endian::native == std::endian::little, "checkpoint blobs assume a little-endian host");

[[noreturn]] void malformed(const std::string& why) {
  throw Error(ErrorCode::kMalformedFile, "checkpoint: " + why);
}

void append_tensor(json& dir, std::string& blob, const std::string& name, const std::string& role,
                   const Tensor<float>& t) {
  dir.push_back({{"name", name}, {"role", role}, {"shape", t.shape()}, {"offset", blob.size()}, {"count", t.size()}});
  blob.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(float));
}

void read_tensor(const json& entry, const std::string& appendix, Tensor<float>& dst) {
  const auto offset = entry.at("offset").get<std::size_t>();
  const auto count = entry.at("count").get<std::size_t>();
  const auto shape = entry.at("shape").get<Shape>();
  if (shape != dst.shape() || count != dst.size()) {
    malformed("tensor '" + entry.at("name").get<std::string>() + "' has shape " + shape_string(shape) +
              ", expected " + shape_string(dst.shape()));
  }
  if (offset + count * sizeof(float) > appendix.size()) malformed("truncated tensor data");
  std::memcpy(dst.data(), appendix.data() + offset, count * sizeof(float));
}

}  // namespace

json layer_spec_to_json(const LayerSpec& s) {
  json j{{"kind", to_string(s.kind)}, {"name", s.name}};
  switch (s.kind) {
    case LayerKind::kConv2d:
      j["out_channels"] = s.out_channels;
      j["pad"] = {s.pad_h, s.pad_w};
      [[fallthrough]];
    case LayerKind::kMaxPool2d:
      j["kernel"] = {s.kernel_h, s.kernel_w};
      j["stride"] = {s.stride_h, s.stride_w};
      break;
    case LayerKind::kFullyConnected: j["units"] = s.units; break;
    case LayerKind::kDropout: j["rate"] = s.rate; break;
    case LayerKind::kBatchNorm:
      j["epsilon"] = s.epsilon;
      j["momentum"] = s.momentum;
      break;
    case LayerKind::kRelu:
    case LayerKind::kSoftmax: break;
  }
  return j;
}

LayerSpec layer_spec_from_json(const json& j) {
  LayerSpec s;
  s.kind = layer_kind_from_string(j.at("kind").get<std::string>());
  s.name = j.at("name").get<std::string>();
  if (j.contains("out_channels")) s.out_channels = j["out_channels"].get<int>();
  if (j.contains("kernel")) {
    s.kernel_h = j["kernel"].at(0).get<int>();
    s.kernel_w = j["kernel"].at(1).get<int>();
  }
  if (j.contains("stride")) {
    s.stride_h = j["stride"].at(0).get<int>();
    s.stride_w = j["stride"].at(1).get<int>();
  }
  if (j.contains("pad")) {
    s.pad_h = j["pad"].at(0).get<int>();
    s.pad_w = j["pad"].at(1).get<int>();
  }
  if (j.contains("units")) s.units = j["units"].get<int>();
  if (j.contains("rate")) s.rate = j["rate"].get<double>();
  if (j.contains("epsilon")) s.epsilon = j["epsilon"].get<double>();
  if (j.contains("momentum")) s.momentum = j["momentum"].get<double>();
  return s;
}

std::string encode_checkpoint(const Network<float>& net, const json& metadata, bool include_optimizer_state) {
  json header;
  header["format_version"] = kCheckpointVersion;
  header["dtype"] = "float32";
  header["input_shape"] = net.input_shape();
  header["layers"] = json::array();
  for (const auto& s : net.specs()) header["layers"].push_back(layer_spec_to_json(s));
  header["tap_layer"] = net.tap_layer();
  header["head_layers"] = json::array();
  for (const auto& s : net.head_specs()) header["head_layers"].push_back(layer_spec_to_json(s));
  header["metadata"] = metadata;
  header["optimizer_state"] = include_optimizer_state;

  std::string blob;
  json dir = json::array();
  json params = json::array();
  for (const auto* p : net.parameters()) {
    append_tensor(dir, blob, p->name, "value", p->value);
    params.push_back({{"name", p->name}, {"trainable", p->trainable}, {"step_count", p->step_count}});
  }
  for (const auto& b : net.buffers()) append_tensor(dir, blob, b.name, "buffer", *b.tensor);
  if (include_optimizer_state) {
    for (const auto* p : net.parameters()) {
      append_tensor(dir, blob, p->name, "adam_m", p->adam_m);
      append_tensor(dir, blob, p->name, "adam_v", p->adam_v);
    }
  }
  header["parameters"] = params;
  header["tensors"] = dir;

  const std::string text = header.dump();
  std::string out(kMagic, kMagicLen);
  const std::uint64_t len = text.size();
  out.append(reinterpret_cast<const char*>(&len), sizeof(len));
  out += text;
  out += blob;
  return out;
}

namespace {

struct Parsed {
  json header;
  std::string appendix;
};

Parsed parse(const std::string& bytes) {
  if (bytes.size() < kMagicLen + 8 || bytes.compare(0, kMagicLen, kMagic) != 0) malformed("bad magic");
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + kMagicLen, sizeof(len));
  const std::size_t start = kMagicLen + sizeof(len);
  if (len > bytes.size() - start) malformed("truncated header");
  Parsed p;
  try {
    p.header = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                           bytes.begin() + static_cast<std::ptrdiff_t>(start + len));
  } catch (const json::exception& e) {
    malformed(std::string("header: ") + e.what());
  }
  p.appendix = bytes.substr(start + len);
  if (p.header.value("format_version", 0) != kCheckpointVersion) malformed("unsupported format version");
  std::size_t expected = 0;
  for (const auto& t : p.header.at("tensors")) {
    expected = std::max(expected, t.at("offset").get<std::size_t>() + t.at("count").get<std::size_t>() * 4);
  }
  if (p.appendix.size() != expected) malformed("truncated or padded tensor appendix");
  return p;
}

}  // namespace

Checkpoint decode_checkpoint(const std::string& bytes) {
  Parsed p = parse(bytes);
  const json& h = p.header;
  try {
    std::vector<LayerSpec> specs, head_specs;
    for (const auto& j : h.at("layers")) specs.push_back(layer_spec_from_json(j));
    for (const auto& j : h.at("head_layers")) head_specs.push_back(layer_spec_from_json(j));
    Rng rng(0);
    Checkpoint ck;
    ck.network = Network<float>::build(h.at("input_shape").get<Shape>(), specs, rng);
    if (!head_specs.empty()) ck.network.attach_head(h.at("tap_layer").get<int>(), head_specs, rng);
    ck.metadata = h.at("metadata");
    ck.has_optimizer_state = h.at("optimizer_state").get<bool>();

    std::map<std::string, const json*> by_key;
    for (const auto& t : h.at("tensors")) {
      by_key[t.at("name").get<std::string>() + ":" + t.at("role").get<std::string>()] = &t;
    }
    auto find = [&](const std::string& key) -> const json& {
      auto it = by_key.find(key);
      if (it == by_key.end()) malformed("missing tensor " + key);
      return *it->second;
    };
    const auto& pinfo = h.at("parameters");
    auto params = ck.network.parameters();
    if (pinfo.size() != params.size()) malformed("parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto* prm = params[i];
      read_tensor(find(prm->name + ":value"), p.appendix, prm->value);
      prm->trainable = pinfo[i].at("trainable").get<bool>();
      prm->step_count = pinfo[i].at("step_count").get<long>();
      if (ck.has_optimizer_state) {
        read_tensor(find(prm->name + ":adam_m"), p.appendix, prm->adam_m);
        read_tensor(find(prm->name + ":adam_v"), p.appendix, prm->adam_v);
      }
    }
    for (auto& b : ck.network.buffers()) read_tensor(find(b.name + ":buffer"), p.appendix, *b.tensor);
    return ck;
  } catch (const json::exception& e) {
    malformed(e.what());
  }
}

std::map<std::string, std::string> checkpoint_tensor_bytes(const std::string& bytes) {
  Parsed p = parse(bytes);
  std::map<std::string, std::string> out;
  for (const auto& t : p.header.at("tensors")) {
    const auto offset = t.at("offset").get<std::size_t>();
    const auto count = t.at("count").get<std::size_t>();
    out[t.at("name").get<std::string>() + ":" + t.at("role").get<std::string>()] =
        p.appendix.substr(offset, count * sizeof(float));
  }
  return out;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kMissingFile, "write failed for " + path.string());
}

void save_checkpoint(const std::filesystem::path& path, const Network<float>& net, const json& metadata,
                     bool include_optimizer_state) {
  write_file_bytes(path, encode_checkpoint(net, metadata, include_optimizer_state));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file_bytes(path)); }

}  // namespace kwsep::nn
