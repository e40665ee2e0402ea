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

#include "losadapt/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace losadapt {
namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream os(p);
  if (!os) throw Error("cannot open " + p.string() + " for writing");
  os << s;
  if (!os) throw Error("write failed: " + p.string());
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%6.2f", 100.0 * v);
  return buf;
}

}  // namespace

Json to_json(const ExperimentConfig& c) {
  return Json{{"name", c.name},           {"baseline", c.baseline},
              {"max_steps", c.max_steps}, {"adapt_params", c.adapt_params},
              {"scheduler", to_json(c.scheduler)}};
}

ExperimentConfig experiment_config_from_json(const Json& j, ExperimentConfig c) {
  c.name = j.value("name", c.name);
  c.baseline = j.value("baseline", c.baseline);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.adapt_params = j.value("adapt_params", c.adapt_params);
  if (c.adapt_params != "all" && c.adapt_params != "calibration")
    throw InvalidArgument("adapt_params must be \"all\" or \"calibration\", got \"" + c.adapt_params + "\"");
  if (j.contains("scheduler")) c.scheduler = scheduler_config_from_json(j.at("scheduler"), c.scheduler);
  return c;
}

const std::vector<std::string>& semantic_kitti_class_names() {
  static const std::vector<std::string> names = {
      "empty",   "car",      "bicycle",  "motorcycle", "truck",      "other-vehicle", "person",
      "bicyclist", "motorcyclist", "road", "parking",  "sidewalk",   "other-ground",  "building",
      "fence",   "vegetation", "trunk",  "terrain",    "pole",       "traffic-sign"};
  return names;
}

Json ExperimentReport::to_json() const {
  Json per_class = Json::object();
  const auto& names = semantic_kitti_class_names();
  for (int c = 1; c <= metrics.num_classes(); ++c) {
    const std::string key = c < static_cast<int>(names.size()) ? names[c] : std::to_string(c);
    const auto iou = metrics.class_iou(c);
    per_class[key] = iou ? Json(*iou) : Json(nullptr);
  }
  Json steps_json = Json::array();
  for (const StepRecord& s : steps) {
    steps_json.push_back({{"step", s.step},
                          {"seconds", s.seconds},
                          {"adapted", s.adapted},
                          {"has_gt", s.has_gt},
                          {"moment_loss", s.moment_loss},
                          {"gradual_loss", s.gradual_loss}});
  }
  return Json{{"schema_version", kSchemaVersion},
              {"name", name},
              {"baseline", baseline},
              {"playback", playback},
              {"miou", metrics.miou()},
              {"ciou", metrics.ciou()},
              {"miou_convention", "mean over classes with non-zero union"},
              {"per_class_iou", per_class},
              {"frames_evaluated", metrics.frames()},
              {"valid_voxels", metrics.valid_voxels()},
              {"total_seconds", total_seconds},
              {"steps", steps_json},
              {"config", config}};
}

std::string ExperimentReport::table() const {
  std::ostringstream os;
  const auto& names = semantic_kitti_class_names();
  os << "run: " << name << (baseline ? " (baseline)" : "") << (playback ? " (playback)" : "") << "\n";
  os << "frames evaluated: " << metrics.frames() << "\n";
  os << "class              IoU %\n";
  for (int c = 1; c <= metrics.num_classes(); ++c) {
    std::string label = c < static_cast<int>(names.size()) ? names[c] : std::to_string(c);
    label.resize(16, ' ');
    const auto iou = metrics.class_iou(c);
    os << label << "  " << (iou ? pct(*iou) : std::string("     -")) << "\n";
  }
  os << "mIoU              " << pct(metrics.miou()) << "   (classes absent from both sides skipped)\n";
  os << "cIoU              " << pct(metrics.ciou()) << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "wall time         %.2f s\n", total_seconds);
  os << buf;
  return os.str();
}

ExperimentReport run_experiment(const ExperimentConfig& config, TtaScheduler& scheduler, SequenceSource& source,
                                const StepObserver& observer) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.name = config.name;
  report.baseline = config.baseline;
  report.playback = scheduler.config().playback;
  report.metrics = MetricAccumulator(scheduler.base_model().spec().num_classes);
  report.config = to_json(config);
  report.config["scheduler"] = to_json(scheduler.config());

  for (std::int64_t n = 0; config.max_steps < 0 || n < config.max_steps; ++n) {
    std::optional<Frame> frame = source.next();
    if (!frame) break;
    StepResult r = scheduler.step(frame->index, frame->cloud, frame->pose);
    StepRecord rec;
    rec.step = r.step;
    rec.seconds = r.diag.seconds;
    rec.adapted = r.diag.adapted;
    rec.has_gt = frame->gt.has_value();
    rec.moment_loss = r.diag.moment_loss.total;
    rec.gradual_loss = r.diag.gradual_loss.total;
    if (frame->gt) report.metrics.accumulate(r.prediction, *frame->gt);
    report.steps.push_back(rec);
    if (observer) observer(*frame, r);
  }
  report.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::unique_ptr<SscModel> adaptable_model(const ExperimentConfig& config, const SscModel& pretrained) {
  std::unique_ptr<SscModel> model = pretrained.clone();
  if (config.adapt_params == "calibration") {
    auto* toy = dynamic_cast<ToyVoxelModel*>(model.get());
    if (!toy) throw InvalidArgument("adapt_params \"calibration\" needs a ToyVoxelModel");
    toy->set_parameter_mask(toy->calibration_mask());
  } else if (config.adapt_params != "all") {
    throw InvalidArgument("unknown adapt_params \"" + config.adapt_params + "\"");
  }
  return model;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const SscModel& pretrained, SequenceSource& source,
                                const StepObserver& observer) {
  SchedulerConfig sc = config.scheduler;
  if (config.baseline) sc.playback = true;
  const std::unique_ptr<SscModel> model = adaptable_model(config, pretrained);
  TtaScheduler scheduler(*model, sc);
  return run_experiment(config, scheduler, source, observer);
}

void write_report(const std::filesystem::path& dir, const ExperimentReport& report) {
  std::filesystem::create_directories(dir);
  write_text(dir / "report.json", report.to_json().dump(2) + "\n");
  write_text(dir / "report.txt", report.table());
  write_text(dir / "config.json", report.config.dump(2) + "\n");
}

SynthBenchmark::SynthBenchmark() {
  // Training streets: facades close to the sidewalk, small gaps, many cars.
  train_layout.building_setback_min = 0.2;
  train_layout.building_setback_max = 1.0;
  train_layout.building_gap_min = 0.5;
  train_layout.building_gap_max = 2.0;
  train_layout.parked_car_prob = 0.8;
  train_layout.terrain_gap_max = 2.0;
  train_layout.lidar_rings = 64;
  // Test street: set back, sparse buildings, few cars.
  test_layout.seed = 7;
  test_layout.building_setback_min = 3.0;
  test_layout.building_setback_max = 6.0;
  test_layout.building_gap_min = 4.0;
  test_layout.building_gap_max = 12.0;
  test_layout.parked_car_prob = 0.3;
  test_layout.terrain_gap_max = 8.0;
  test_layout.lidar_rings = 64;

  experiment.adapt_params = "calibration";
  experiment.scheduler.frame_diff = 2;
  experiment.scheduler.lr_moment = 0.07;
  experiment.scheduler.lr_gradual = 0.005;
  experiment.scheduler.tau_reliability = 0.6;
}

std::unique_ptr<SequenceSource> SynthBenchmark::test_sequence() const {
  return synth_sequence(make_street_world(test_layout), spec, test_steps, test_rays, test_layout.seed,
                        visibility_window);
}

std::vector<TrainingSample> SynthBenchmark::training_set() const {
  std::vector<TrainingSample> out;
  for (std::uint64_t seed : train_seeds) {
    StreetOptions layout = train_layout;
    layout.seed = seed;
    const SyntheticWorld w = make_street_world(layout);
    w.check_sensor_clear(train_steps);
    for (std::int64_t k = 0; k < train_steps; k += train_stride)
      out.push_back({cast_scan(w, k, train_rays, seed).cloud, rasterize_gt(w, spec, k)});
  }
  return out;
}

ToyVoxelModel SynthBenchmark::pretrain_model(std::vector<double>* epoch_losses) const {
  return pretrain(ToyVoxelModel(spec), training_set(), pretrain_epochs, pretrain_lr, pretrain_seed, epoch_losses);
}

Json to_json(const SynthBenchmark& b) {
  return Json{{"grid", to_json(b.spec)},
              {"test_layout", to_json(b.test_layout)},
              {"test_steps", b.test_steps},
              {"test_rays", b.test_rays},
              {"visibility_window", b.visibility_window},
              {"train_layout", to_json(b.train_layout)},
              {"train_seeds", b.train_seeds},
              {"train_steps", b.train_steps},
              {"train_stride", b.train_stride},
              {"train_rays", b.train_rays},
              {"pretrain_epochs", b.pretrain_epochs},
              {"pretrain_lr", b.pretrain_lr},
              {"pretrain_seed", b.pretrain_seed},
              {"experiment", to_json(b.experiment)}};
}

SynthBenchmark synth_benchmark_from_json(const Json& j, SynthBenchmark b) {
  if (j.contains("grid")) b.spec = grid_spec_from_json(j.at("grid"), b.spec);
  if (j.contains("test_layout")) b.test_layout = street_options_from_json(j.at("test_layout"), b.test_layout);
  b.test_steps = j.value("test_steps", b.test_steps);
  b.test_rays = j.value("test_rays", b.test_rays);
  b.visibility_window = j.value("visibility_window", b.visibility_window);
  if (j.contains("train_layout")) b.train_layout = street_options_from_json(j.at("train_layout"), b.train_layout);
  b.train_seeds = j.value("train_seeds", b.train_seeds);
  b.train_steps = j.value("train_steps", b.train_steps);
  b.train_stride = j.value("train_stride", b.train_stride);
  b.train_rays = j.value("train_rays", b.train_rays);
  b.pretrain_epochs = j.value("pretrain_epochs", b.pretrain_epochs);
  b.pretrain_lr = j.value("pretrain_lr", b.pretrain_lr);
  b.pretrain_seed = j.value("pretrain_seed", b.pretrain_seed);
  if (j.contains("experiment")) b.experiment = experiment_config_from_json(j.at("experiment"), b.experiment);
  if (b.train_stride < 1) throw InvalidArgument("train_stride must be >= 1");
  return b;
}

}  // namespace losadapt
