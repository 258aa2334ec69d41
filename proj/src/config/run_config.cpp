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

#include "kwsep/config/run_config.hpp"

#include <fstream>

#include "kwsep/config/json_io.hpp"
#include "kwsep/rng.hpp"

namespace kwsep::config {

namespace {

// Section validators name keys relative to their own section.
[[noreturn]] void rethrow_under(const ValidationError& e, const std::string& parent) {
  const std::string msg = std::string(e.what()).substr(e.key().size() + 2);
  throw ValidationError(parent + "." + e.key(), msg);
}

}  // namespace

void RunConfig::validate() const {
  features.validate(corpus.synth.sample_rate);
  detector.validate();
  train.validate();
  try {
    corpus.window.validate();
    corpus.synth.validate(corpus.window);
  } catch (const ValidationError& e) {
    rethrow_under(e, "corpus");
  }
  if (corpus.n_positive < 0) throw ValidationError("corpus.n_positive", "must be >= 0");
  if (corpus.n_negative < 0) throw ValidationError("corpus.n_negative", "must be >= 0");
  if (corpus.n_positive + corpus.n_negative == 0) throw ValidationError("corpus.n_positive", "corpus would be empty");
  if (!(corpus.heldout_fraction >= 0 && corpus.heldout_fraction < 1)) {
    throw ValidationError("corpus.heldout_fraction", "must be in [0, 1)");
  }
  if (regression_head.channels < 1) throw ValidationError("regression_head.channels", "must be >= 1");
  if (regression_head.kernel_h < 1 || regression_head.kernel_w < 1) {
    throw ValidationError("regression_head.kernel", "must be >= 1");
  }
  if (regression_head.tap_conv < 1 || regression_head.tap_conv > static_cast<int>(detector.conv.size())) {
    throw ValidationError("regression_head.tap_conv", "must name a conv stage (1.." +
                                                          std::to_string(detector.conv.size()) + ")");
  }
  endpointer.validate();
  if (!(eval.long_threshold_ms > 0)) throw ValidationError("eval.long_threshold_ms", "must be > 0");
  if (!(eval.match_window_ms > 0)) throw ValidationError("eval.match_window_ms", "must be > 0");
  if (eval.target_far && !(*eval.target_far >= 0 && *eval.target_far <= 1)) {
    throw ValidationError("eval.target_far", "must be in [0, 1]");
  }
  for (const auto& m : eval.methods) {
    try {
      stream::endpoint_method_from_string(m);
    } catch (const Error& e) {
      throw ValidationError("eval.methods", e.what());
    }
  }
  if (detector.input_frames != corpus.window.window_frames) {
    throw ValidationError("detector.input_frames", "must equal corpus.window.window_frames (" +
                                                       std::to_string(corpus.window.window_frames) + ")");
  }
  if (detector.input_dims != features.n_mels) {
    throw ValidationError("detector.input_dims", "must equal features.n_mels (" + std::to_string(features.n_mels) + ")");
  }
  if (corpus.window.hop_ms != features.hop_ms) {
    throw ValidationError("corpus.window.hop_ms", "must equal features.hop_ms");
  }
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  ObjectReader r(j, "");
  r.read("seed", c.seed);
  if (const json* v = r.child("features")) from_json(*v, c.features, "features");
  if (const json* v = r.child("detector")) from_json(*v, c.detector, "detector");
  if (const json* v = r.child("regression_head")) from_json(*v, c.regression_head, "regression_head");
  if (const json* v = r.child("train")) {
    if (v->is_object() && v->contains("seed")) throw ValidationError("train.seed", "use the top-level seed");
    from_json(*v, c.train, "train");
  }
  if (const json* v = r.child("corpus")) {
    ObjectReader cr(*v, "corpus");
    if (const json* s = cr.child("synth")) from_json(*s, c.corpus.synth, "corpus.synth");
    if (const json* w = cr.child("window")) from_json(*w, c.corpus.window, "corpus.window");
    cr.read("n_positive", c.corpus.n_positive);
    cr.read("n_negative", c.corpus.n_negative);
    cr.read("heldout_fraction", c.corpus.heldout_fraction);
    cr.finish();
  }
  if (const json* v = r.child("endpointer")) from_json(*v, c.endpointer, "endpointer");
  if (const json* v = r.child("eval")) from_json(*v, c.eval, "eval");
  if (const json* v = r.child("paths")) {
    ObjectReader pr(*v, "paths");
    pr.read("corpus", c.paths.corpus);
    pr.read("detector", c.paths.detector);
    pr.read("out", c.paths.out);
    pr.finish();
  }
  r.finish();
  c.train.seed = c.seed;
  return c;
}

json to_json(const RunConfig& c) {
  json train = to_json(c.train);
  train.erase("seed");
  return {{"seed", c.seed},
          {"features", to_json(c.features)},
          {"detector", to_json(c.detector)},
          {"regression_head", to_json(c.regression_head)},
          {"train", train},
          {"corpus",
           {{"synth", to_json(c.corpus.synth)},
            {"window", to_json(c.corpus.window)},
            {"n_positive", c.corpus.n_positive},
            {"n_negative", c.corpus.n_negative},
            {"heldout_fraction", c.corpus.heldout_fraction}}},
          {"endpointer", to_json(c.endpointer)},
          {"eval", to_json(c.eval)},
          {"paths", {{"corpus", c.paths.corpus}, {"detector", c.paths.detector}, {"out", c.paths.out}}}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kMissingFile, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ValidationError("<root>", std::string("config is not valid JSON: ") + e.what());
  }
  return run_config_from_json(j);
}

std::uint64_t corpus_seed(std::uint64_t run_seed) { return derive_seed(run_seed, 0x636f72707573ULL); }

std::string schema_document() { return to_json(RunConfig{}).dump(2); }

}  // namespace kwsep::config
