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

// kwsep: corpus generation, training, streaming inference and evaluation.
// Exit codes: 0 success, 2 validation error, 3 runtime error. Failures
// print one JSON object on stderr: {"error": {"code", "key", "message"}}.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "kwsep/audio/wav.hpp"
#include "kwsep/config/json_io.hpp"
#include "kwsep/config/run_config.hpp"
#include "kwsep/eval/report.hpp"
#include "kwsep/pipeline.hpp"
#include "kwsep/stream/endpointer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kwsep;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string mode;
  std::optional<int> steps;
  std::vector<std::string> methods;
  std::optional<double> target_far;
  std::string corpus;
  std::string detector;
};

config::RunConfig resolve(const Overrides& o) {
  config::RunConfig cfg = o.config.empty() ? config::RunConfig{} : config::load_run_config(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.train.seed = *o.seed;
  }
  if (!o.out.empty()) cfg.paths.out = o.out;
  if (!o.corpus.empty()) cfg.paths.corpus = o.corpus;
  if (!o.detector.empty()) cfg.paths.detector = o.detector;
  if (!o.mode.empty()) {
    try {
      cfg.train.mode = train::train_mode_from_string(o.mode);
    } catch (const Error& e) {
      throw ValidationError("--mode", e.what());
    }
  }
  if (o.steps) cfg.train.steps = *o.steps;
  if (!o.methods.empty()) cfg.eval.methods = o.methods;
  if (o.target_far) cfg.eval.target_far = *o.target_far;
  cfg.validate();
  return cfg;
}

void require_path(const std::string& value, const char* key) {
  if (value.empty()) throw ValidationError(key, "required");
}

void require_existing(const std::string& value, const char* key) {
  require_path(value, key);
  if (!fs::exists(value)) throw ValidationError(key, "'" + value + "' does not exist");
}

std::string file_digest(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return eval::hex64(eval::fnv1a64(ss.str()));
}

fs::path sibling(const fs::path& p, const std::string& suffix) {
  fs::path s = p;
  s.replace_extension();
  return s.string() + suffix;
}

int cmd_gen_data(const Overrides& o) {
  const auto cfg = resolve(o);
  require_path(cfg.paths.out.empty() ? cfg.paths.corpus : cfg.paths.out, "paths.out");
  const fs::path dir = cfg.paths.out.empty() ? cfg.paths.corpus : cfg.paths.out;
  const auto records = pipeline::make_corpus(cfg);
  data::write_corpus(dir, records);
  const auto manifest = data::manifest_path(dir);
  std::cout << json{{"manifest", manifest.string()},
                    {"streams", records.size()},
                    {"manifest_digest", file_digest(manifest)}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_train(const Overrides& o, const std::string& log_path, const std::string& state_path) {
  const auto cfg = resolve(o);
  require_existing(cfg.paths.corpus, "paths.corpus");
  require_path(cfg.paths.out, "paths.out");
  std::optional<models::KwsModel> detector;
  if (train::is_regression(cfg.train.mode)) {
    require_existing(cfg.paths.detector, "paths.detector");
    detector = models::load_model(cfg.paths.detector);
  }
  const auto corpus = data::load_corpus(cfg.paths.corpus);
  const fs::path out = cfg.paths.out;
  std::ofstream log(log_path.empty() ? sibling(out, ".log.jsonl") : fs::path(log_path));
  auto res = pipeline::train(cfg, corpus, detector ? &*detector : nullptr, &log);
  models::save_model(out, res.model);
  if (!state_path.empty()) {
    std::ofstream st(state_path, std::ios::binary);
    st << res.final_resumable;
  }
  std::cout << json{{"checkpoint", out.string()},
                    {"model_kind", models::to_string(res.model.kind)},
                    {"checkpoint_digest", file_digest(out)}}
                   .dump()
            << '\n';
  return 0;
}

json estimate_json(const stream::EndpointEstimate& e) {
  json j{{"method", stream::to_string(e.method)},
         {"start_ms", e.start_ms},
         {"end_ms", e.end_ms},
         {"event_ms", e.event.time_ms},
         {"local_max_ms", e.event.local_max_ms},
         {"fallback", e.fallback}};
  if (!e.note.empty()) j["note"] = e.note;
  return j;
}

int cmd_stream(const Overrides& o, const std::string& ckpt, const std::string& wav) {
  const auto cfg = resolve(o);
  require_existing(ckpt, "--ckpt");
  require_existing(wav, "--wav");
  require_path(cfg.paths.out, "paths.out");
  const auto model = models::load_model(ckpt);
  const auto methods = eval::methods_for(model, cfg.eval);
  if (!cfg.eval.methods.empty() && methods.size() != cfg.eval.methods.size()) {
    throw Error(ErrorCode::kModelKindMismatch, "model kind mismatch: a requested method is not available for a " +
                                                   std::string(models::to_string(model.kind)) + " model");
  }
  const auto clip = audio::read_wav(wav);
  const auto res = stream::run_endpointer(model, audio::lfbe(clip, model.features), cfg.endpointer, methods);
  std::ofstream csv(cfg.paths.out);
  if (!csv) throw Error(ErrorCode::kMissingFile, "cannot write " + cfg.paths.out);
  stream::write_trace_csv(csv, res.traces);
  json events = json::array();
  for (const auto& ev : res.events) {
    events.push_back({{"time_ms", ev.time_ms},
                      {"score", ev.score},
                      {"threshold", ev.threshold},
                      {"local_max_ms", ev.local_max_ms},
                      {"local_max_score", ev.local_max_score}});
  }
  json estimates = json::array();
  for (const auto& e : res.estimates) estimates.push_back(estimate_json(e));
  std::cout << json{{"trace", cfg.paths.out}, {"events", events}, {"estimates", estimates}}.dump(2) << '\n';
  return 0;
}

int cmd_eval(const Overrides& o, const std::vector<std::string>& ckpts) {
  const auto cfg = resolve(o);
  if (!cfg.eval.target_far) throw ValidationError("eval.target_far", "required (config or --target-far)");
  require_existing(cfg.paths.corpus, "paths.corpus");
  require_path(cfg.paths.out, "paths.out");
  if (ckpts.empty()) throw ValidationError("--ckpt", "at least one checkpoint is required");
  std::vector<models::KwsModel> loaded;
  std::vector<std::string> labels;
  for (const auto& spec : ckpts) {
    // "label=path" or a bare path labelled by its file stem.
    const auto eq = spec.find('=');
    const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    require_existing(path, "--ckpt");
    labels.push_back(eq == std::string::npos ? fs::path(path).stem().string() : spec.substr(0, eq));
    loaded.push_back(models::load_model(path));
  }
  std::vector<eval::EvalModel> models;
  for (std::size_t i = 0; i < loaded.size(); ++i) models.push_back({labels[i], &loaded[i]});
  const auto corpus = data::load_corpus(cfg.paths.corpus);
  const auto res = pipeline::evaluate(cfg, models, corpus);
  const fs::path out = cfg.paths.out;
  eval::write_report(out, res.report);
  std::ofstream summary(sibling(out, ".csv"));
  eval::write_summary_csv(summary, res.report);
  std::ofstream errors(sibling(out, ".errors.csv"));
  eval::write_errors_csv(errors, res.pairs);
  std::cout << json{{"report", out.string()},
                    {"summary", sibling(out, ".csv").string()},
                    {"errors", sibling(out, ".errors.csv").string()}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_compare(const std::vector<std::string>& reports, const std::string& out) {
  if (reports.empty()) throw ValidationError("reports", "at least one report is required");
  std::vector<eval::EvalReport> loaded;
  std::vector<std::string> labels;
  for (const auto& r : reports) {
    require_existing(r, "reports");
    loaded.push_back(eval::read_report(r));
    labels.push_back(fs::path(r).stem().string());
  }
  if (out.empty()) {
    eval::write_compare_csv(std::cout, labels, loaded);
  } else {
    std::ofstream os(out);
    eval::write_compare_csv(os, labels, loaded);
  }
  return 0;
}

int fail(int code, const std::string& kind, const std::string& key, const std::string& message) {
  json e{{"code", kind}, {"message", message}};
  if (!key.empty()) e["key"] = key;
  std::cerr << json{{"error", e}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kwsep: keyword spotting and wake-word endpointing toolkit"};
  app.require_subcommand(1);
  Overrides o;
  std::vector<std::string> ckpts, reports;
  std::string ckpt, wav, log_path, state_path, compare_out;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON run config (see `kwsep schema`)");
    sub->add_option("--seed", o.seed, "run seed (overrides the config)");
    sub->add_option("--out", o.out, "output path (overrides paths.out)");
  };

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic corpus with manifest");
  add_common(gen);

  auto* tr = app.add_subcommand("train", "train a model on a corpus");
  add_common(tr);
  tr->add_option("--mode", o.mode, "detector | multi_aligned | regression_frozen | regression_multitask");
  tr->add_option("--steps", o.steps, "training steps (overrides train.steps)");
  tr->add_option("--corpus", o.corpus, "corpus directory (overrides paths.corpus)");
  tr->add_option("--detector", o.detector, "detector checkpoint for regression modes");
  tr->add_option("--log", log_path, "JSON-lines training log (default <out>.log.jsonl)");
  tr->add_option("--save-state", state_path, "write the final resumable training state here");

  auto* st = app.add_subcommand("stream", "run the endpointer over one WAV file");
  add_common(st);
  st->add_option("--ckpt", ckpt, "model checkpoint")->required();
  st->add_option("--wav", wav, "16-bit PCM mono WAV")->required();
  st->add_option("--method", o.methods, "endpoint method(s); default depends on the model kind");

  auto* ev = app.add_subcommand("eval", "evaluate checkpoints on a corpus");
  add_common(ev);
  ev->add_option("--ckpt", ckpts, "checkpoint path or label=path; repeatable")->required();
  ev->add_option("--corpus", o.corpus, "corpus directory (overrides paths.corpus)");
  ev->add_option("--method", o.methods,
                 "const | regression_thres_crossing | regression_local_max | aligned; repeatable");
  ev->add_option("--target-far", o.target_far, "false acceptance rate for the FRR operating point");

  auto* cmp = app.add_subcommand("compare", "tabulate several evaluation reports");
  cmp->add_option("reports", reports, "report JSON files")->required();
  cmp->add_option("--out", compare_out, "CSV output (default stdout)");

  auto* schema = app.add_subcommand("schema", "print every config key with its default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kExitValidation, "validation", "", e.what());
  }

  try {
    if (*gen) return cmd_gen_data(o);
    if (*tr) return cmd_train(o, log_path, state_path);
    if (*st) return cmd_stream(o, ckpt, wav);
    if (*ev) return cmd_eval(o, ckpts);
    if (*cmp) return cmd_compare(reports, compare_out);
    if (*schema) {
      std::cout << config::schema_document() << '\n';
      return 0;
    }
  } catch (const ValidationError& e) {
    return fail(kExitValidation, to_string(e.code()), e.key(), e.what());
  } catch (const Error& e) {
    const bool input_error = e.code() == ErrorCode::kModelKindMismatch;
    return fail(input_error ? kExitValidation : kExitRuntime, to_string(e.code()), "", e.what());
  } catch (const std::exception& e) {
    return fail(kExitRuntime, "runtime", "", e.what());
  }
  return kExitRuntime;
}
