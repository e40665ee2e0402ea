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

// Runs a sequence through the scheduler and scores it, plus the synthetic
// benchmark used by the CLI and the acceptance suite.

#ifndef LOSADAPT_EXPERIMENT_HPP_
#define LOSADAPT_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "losadapt/config.hpp"
#include "losadapt/kitti_io.hpp"
#include "losadapt/metrics.hpp"
#include "losadapt/model.hpp"
#include "losadapt/scheduler.hpp"
#include "losadapt/synthetic.hpp"

namespace losadapt {

struct ExperimentConfig {
  std::string name = "adapt";
  SchedulerConfig scheduler;
  /// Frozen pre-trained model: no update of any kind.
  bool baseline = false;
  /// Stop after this many frames; < 0 runs the whole sequence.
  std::int64_t max_steps = -1;
  /// Trainable subset during adaptation: "all" or "calibration" (see
  /// ToyVoxelModel::calibration_mask; toy models only).
  std::string adapt_params = "all";
};

Json to_json(const ExperimentConfig& c);
ExperimentConfig experiment_config_from_json(const Json& j, ExperimentConfig c = {});

struct StepRecord {
  std::int64_t step = 0;
  double seconds = 0.0;
  bool adapted = false;
  bool has_gt = false;
  double moment_loss = 0.0;
  double gradual_loss = 0.0;
};

struct ExperimentReport {
  static constexpr int kSchemaVersion = 1;

  std::string name;
  bool baseline = false;
  bool playback = false;
  MetricAccumulator metrics;
  std::vector<StepRecord> steps;
  double total_seconds = 0.0;
  Json config;  // resolved experiment configuration

  Json to_json() const;
  /// Plain-text table of per-class IoU, mIoU and cIoU in percent.
  std::string table() const;
};

/// Called after every step with the frame and the scheduler's output.
using StepObserver = std::function<void(const Frame&, const StepResult&)>;

/// Streams `source` through `scheduler`, scoring frames that carry ground truth.
ExperimentReport run_experiment(const ExperimentConfig& config, TtaScheduler& scheduler, SequenceSource& source,
                                const StepObserver& observer = {});

/// Copy of `pretrained` with config.adapt_params applied as its parameter mask.
std::unique_ptr<SscModel> adaptable_model(const ExperimentConfig& config, const SscModel& pretrained);

/// Builds the scheduler from `pretrained` (frozen when config.baseline) and runs it.
ExperimentReport run_experiment(const ExperimentConfig& config, const SscModel& pretrained, SequenceSource& source,
                                const StepObserver& observer = {});

/// Writes report.json, report.txt and config.json into `dir` (created if needed).
void write_report(const std::filesystem::path& dir, const ExperimentReport& report);

/// Class names for the 19-class taxonomy, index 0 = "empty".
const std::vector<std::string>& semantic_kitti_class_names();

/// The desk-scale benchmark: a model pre-trained on densely built-up streets,
/// then evaluated on an unseen, open street whose ground truth is limited to
/// voxels the sensor observes within a few frames.
struct SynthBenchmark {
  GridSpec spec = synthetic_grid_spec();

  StreetOptions test_layout;  // seed selects the test street
  std::int64_t test_steps = 50;
  int test_rays = 64 * 128;
  int visibility_window = 5;  // GT voxels unseen within +-window frames are 255; < 0 keeps all

  StreetOptions train_layout;  // seed is replaced by each of train_seeds
  std::vector<std::uint64_t> train_seeds = {101, 102, 103, 104};
  std::int64_t train_steps = 40;  // per layout
  int train_stride = 8;           // keep every n-th frame
  int train_rays = 64 * 128;

  int pretrain_epochs = 20;
  double pretrain_lr = 0.2;
  std::uint64_t pretrain_seed = 1;

  /// Adaptation settings tuned for this scale (learning rates far above the
  /// SchedulerConfig defaults, which assume a deep network).
  ExperimentConfig experiment;

  SynthBenchmark();
  std::unique_ptr<SequenceSource> test_sequence() const;
  std::vector<TrainingSample> training_set() const;
  ToyVoxelModel pretrain_model(std::vector<double>* epoch_losses = nullptr) const;
};

Json to_json(const SynthBenchmark& b);
SynthBenchmark synth_benchmark_from_json(const Json& j, SynthBenchmark b = {});

}  // namespace losadapt

#endif  // LOSADAPT_EXPERIMENT_HPP_
