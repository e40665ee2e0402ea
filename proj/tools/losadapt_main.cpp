// Copyright 2026 The losadapt Authors.
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

// Command-line entry point: pretrain, adapt, playback, evaluate, synth, bev.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "losadapt/bev.hpp"
#include "losadapt/experiment.hpp"

namespace losadapt {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::string sequence;
  std::string model;
  std::string learning_map;
  std::string snapshot;
  std::string out = "out";
  std::optional<int> frame_diff;
  std::optional<int> iters;
  std::optional<double> tau;
  std::optional<double> lr_moment;
  std::optional<double> lr_gradual;
  std::optional<double> pose_noise;
  std::optional<std::int64_t> max_steps;
  bool playback = false;
};

void log(const std::string& msg) { std::fprintf(stderr, "losadapt: %s\n", msg.c_str()); }

Json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  try {
    return Json::parse(is);
  } catch (const Json::parse_error& e) {
    throw FormatError(path + ": " + e.what(), static_cast<std::int64_t>(e.byte));
  }
}

void write_json(const fs::path& p, const Json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream os(p);
  if (!os) throw Error("cannot open " + p.string() + " for writing");
  os << j.dump(2) << "\n";
}

// The config file is a benchmark document; flags override its experiment block.
SynthBenchmark resolve_benchmark(const Options& o) {
  SynthBenchmark b = o.config.empty() ? SynthBenchmark{} : synth_benchmark_from_json(read_json(o.config));
  SchedulerConfig& s = b.experiment.scheduler;
  if (o.frame_diff) s.frame_diff = *o.frame_diff;
  if (o.iters) s.iters_per_step = *o.iters;
  if (o.tau) s.tau_reliability = *o.tau;
  if (o.lr_moment) s.lr_moment = *o.lr_moment;
  if (o.lr_gradual) s.lr_gradual = *o.lr_gradual;
  if (o.pose_noise) s.pose_noise_sigma = *o.pose_noise;
  if (o.max_steps) b.experiment.max_steps = *o.max_steps;
  if (o.playback) s.playback = true;
  s.validate();
  return b;
}

std::string learning_map_path(const Options& o) {
  if (!o.learning_map.empty()) return o.learning_map;
  if (!o.config.empty()) {
    const Json j = read_json(o.config);
    if (j.contains("learning_map")) return j.at("learning_map").get<std::string>();
  }
  return {};
}

std::unique_ptr<SequenceSource> open_sequence(const Options& o, const SynthBenchmark& b) {
  if (o.sequence.empty()) return b.test_sequence();
  if (o.sequence.rfind("synth:", 0) == 0) {
    StreetOptions layout = b.test_layout;
    try {
      layout.seed = std::stoull(o.sequence.substr(6));
    } catch (const std::exception&) {
      throw InvalidArgument("--sequence synth:SEED needs an integer seed, got \"" + o.sequence + "\"");
    }
    return synth_sequence(make_street_world(layout), b.spec, b.test_steps, b.test_rays, layout.seed,
                          b.visibility_window);
  }
  const std::string map = learning_map_path(o);
  return std::make_unique<KittiSequence>(o.sequence, b.spec,
                                         map.empty() ? LearningMap::semantic_kitti() : LearningMap::from_json_file(map));
}

ToyVoxelModel obtain_model(const Options& o, const SynthBenchmark& b) {
  if (!o.model.empty()) {
    ToyVoxelModel m = ToyVoxelModel::load_file(o.model);
    require_compatible(m.spec(), b.spec, "--model");
    return m;
  }
  log("no --model given, pre-training on the synthetic training streets");
  return b.pretrain_model();
}

Json resolved(const std::string& verb, const Options& o, const SynthBenchmark& b) {
  Json j = to_json(b);
  j["verb"] = verb;
  j["sequence"] = o.sequence.empty() ? "synth:" + std::to_string(b.test_layout.seed) : o.sequence;
  j["model"] = o.model.empty() ? Json(nullptr) : Json(o.model);
  j["snapshot"] = o.snapshot.empty() ? Json(nullptr) : Json(o.snapshot);
  const std::string map = o.sequence.rfind("synth:", 0) == 0 ? std::string() : learning_map_path(o);
  if (!map.empty()) j["learning_map"] = map;
  return j;
}

void finish(const std::string& verb, const Options& o, const SynthBenchmark& b, ExperimentReport& r) {
  r.config = resolved(verb, o, b);
  write_report(o.out, r);
  std::fputs(r.table().c_str(), stdout);
  log("wrote " + (fs::path(o.out) / "report.json").string());
}

int cmd_pretrain(const Options& o) {
  const SynthBenchmark b = resolve_benchmark(o);
  std::vector<double> losses;
  const ToyVoxelModel m = b.pretrain_model(&losses);
  fs::create_directories(o.out);
  const fs::path model = fs::path(o.out) / "model.bin";
  m.save_file(model.string());
  Json j = resolved("pretrain", o, b);
  write_json(fs::path(o.out) / "config.json", j);
  write_json(fs::path(o.out) / "pretrain.json", Json{{"schema_version", 1}, {"epoch_losses", losses}});
  for (std::size_t e = 0; e < losses.size(); ++e) std::printf("epoch %2zu  loss %.6f\n", e + 1, losses[e]);
  log("wrote " + model.string());
  return 0;
}

int cmd_adapt(const std::string& verb, Options o) {
  if (verb == "playback") o.playback = true;
  if (o.playback && o.snapshot.empty()) throw InvalidArgument("playback needs --snapshot PATH");
  const SynthBenchmark b = resolve_benchmark(o);
  const ToyVoxelModel pretrained = obtain_model(o, b);
  const std::unique_ptr<SscModel> model = adaptable_model(b.experiment, pretrained);
  TtaScheduler scheduler(*model, b.experiment.scheduler);
  if (o.playback) {
    std::ifstream is(o.snapshot, std::ios::binary);
    if (!is) throw Error("cannot open " + o.snapshot);
    std::ostringstream ss;
    ss << is.rdbuf();
    scheduler.restore_gradual(ss.str());
  }
  auto seq = open_sequence(o, b);
  ExperimentConfig cfg = b.experiment;
  cfg.name = o.playback ? "playback" : "adapt";
  ExperimentReport r = run_experiment(cfg, scheduler, *seq);
  if (!o.playback && !o.snapshot.empty()) {
    if (fs::path(o.snapshot).has_parent_path()) fs::create_directories(fs::path(o.snapshot).parent_path());
    std::ofstream os(o.snapshot, std::ios::binary);
    const std::string bytes = scheduler.snapshot_gradual();
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw Error("cannot write " + o.snapshot);
    log("wrote gradual-model snapshot " + o.snapshot);
  }
  finish(o.playback ? "playback" : "adapt", o, b, r);
  return 0;
}

int cmd_evaluate(const Options& o) {
  const SynthBenchmark b = resolve_benchmark(o);
  const ToyVoxelModel pretrained = obtain_model(o, b);
  ExperimentConfig cfg = b.experiment;
  cfg.name = "baseline";
  cfg.baseline = true;
  auto seq = open_sequence(o, b);
  ExperimentReport r = run_experiment(cfg, pretrained, *seq);
  finish("evaluate", o, b, r);
  return 0;
}

int cmd_synth(const Options& o) {
  const SynthBenchmark b = resolve_benchmark(o);
  if (!o.sequence.empty() && o.sequence.rfind("synth:", 0) != 0)
    throw InvalidArgument("synth writes a synthetic sequence; use --sequence synth:SEED");
  auto seq = open_sequence(o, b);
  std::vector<Frame> frames;
  while (auto f = seq->next()) frames.push_back(std::move(*f));
  write_kitti_sequence(o.out, frames);
  StreetOptions layout = b.test_layout;
  if (!o.sequence.empty()) layout.seed = std::stoull(o.sequence.substr(6));
  write_json(fs::path(o.out) / "world.json", to_json(make_street_world(layout)));
  write_json(fs::path(o.out) / "config.json", resolved("synth", o, b));
  log("wrote " + std::to_string(frames.size()) + " frames to " + o.out);
  return 0;
}

int cmd_bev(const Options& o) {
  const SynthBenchmark b = resolve_benchmark(o);
  std::optional<ToyVoxelModel> model;
  if (!o.model.empty()) model = obtain_model(o, b);
  auto seq = open_sequence(o, b);
  fs::create_directories(o.out);
  std::int64_t n = 0;
  while (auto f = seq->next()) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06lld", static_cast<long long>(f->index));
    if (f->gt) emit_bev(*f->gt, (fs::path(o.out) / (std::string("gt_") + name + ".ppm")).string());
    if (model) emit_bev(argmax_labels(model->predict(f->cloud)),
                        (fs::path(o.out) / (std::string("pred_") + name + ".ppm")).string());
    ++n;
  }
  write_json(fs::path(o.out) / "config.json", resolved("bev", o, b));
  log("rendered " + std::to_string(n) + " frames into " + o.out);
  return 0;
}

void add_common(CLI::App* c, Options& o) {
  c->add_option("--config", o.config, "Benchmark/experiment JSON file")->check(CLI::ExistingFile);
  c->add_option("--sequence", o.sequence, "SemanticKITTI sequence directory or synth:SEED");
  c->add_option("--out", o.out, "Output directory")->capture_default_str();
}

void add_run(CLI::App* c, Options& o) {
  c->add_option("--model", o.model, "Pre-trained model checkpoint (default: pre-train now)");
  c->add_option("--learning-map", o.learning_map, "JSON learning map for raw dataset ids");
  c->add_option("--frame-diff", o.frame_diff, "Supervising frame offset");
  c->add_option("--iters", o.iters, "Optimizer iterations per step");
  c->add_option("--tau", o.tau, "Reliability threshold for pseudo labels");
  c->add_option("--lr-moment", o.lr_moment, "Moment-model learning rate");
  c->add_option("--lr-gradual", o.lr_gradual, "Gradual-model learning rate");
  c->add_option("--pose-noise", o.pose_noise, "Std. dev. of noise on supervision transforms");
  c->add_option("--max-steps", o.max_steps, "Stop after this many frames");
}

}  // namespace
}  // namespace losadapt

int main(int argc, char** argv) {
  using namespace losadapt;
  CLI::App app{"Online test-time adaptation for LiDAR semantic scene completion"};
  app.require_subcommand(1);
  Options o;

  auto* pretrain = app.add_subcommand("pretrain", "Pre-train the toy model on synthetic streets");
  add_common(pretrain, o);

  auto* adapt = app.add_subcommand("adapt", "Adapt online over a sequence and score it");
  add_common(adapt, o);
  add_run(adapt, o);
  adapt->add_option("--snapshot", o.snapshot, "Write the gradual model here (read it with --playback)");
  adapt->add_flag("--playback", o.playback, "Replay with a frozen gradual-model snapshot");

  auto* playback = app.add_subcommand("playback", "Replay a sequence with a saved gradual model");
  add_common(playback, o);
  add_run(playback, o);
  playback->add_option("--snapshot", o.snapshot, "Gradual-model snapshot to load")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Score the frozen pre-trained model");
  add_common(evaluate, o);
  add_run(evaluate, o);

  auto* synth = app.add_subcommand("synth", "Write a synthetic sequence in the SemanticKITTI layout");
  add_common(synth, o);

  auto* bev = app.add_subcommand("bev", "Render top-down ground-truth (and prediction) images");
  add_common(bev, o);
  bev->add_option("--model", o.model, "Also render this model's predictions");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*pretrain) return cmd_pretrain(o);
    if (*adapt) return cmd_adapt("adapt", o);
    if (*playback) return cmd_adapt("playback", o);
    if (*evaluate) return cmd_evaluate(o);
    if (*synth) return cmd_synth(o);
    if (*bev) return cmd_bev(o);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "losadapt: error: %s\n", e.what());
    return 1;
  }
  return 1;
}
