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

// Online dual-model adaptation over a LiDAR sequence.
//
// Each step gets a fresh moment model (a copy of the pre-trained parameters)
// supervised by the observation `frame_diff` steps back, and a persistent
// gradual model whose update for step j is delayed until step i = j +
// frame_diff, when observation i can supervise the prediction made for j.
// The output trusts the gradual model on voxels it labels static and the
// moment model everywhere else.

#ifndef LOSADAPT_SCHEDULER_HPP_
#define LOSADAPT_SCHEDULER_HPP_

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>

#include "losadapt/adam.hpp"
#include "losadapt/geometry.hpp"
#include "losadapt/grid.hpp"
#include "losadapt/los_supervision.hpp"
#include "losadapt/losses.hpp"
#include "losadapt/model.hpp"

namespace losadapt {

struct SchedulerConfig {
  int frame_diff = 1;       // 0 selects current-moment pseudo-GT only
  int iters_per_step = 3;   // moment-model iterations
  int iters_gradual = -1;   // gradual-model iterations; < 0 follows iters_per_step
  double lr_moment = 3e-4;
  double lr_gradual = 3e-5;
  double tau_reliability = 0.75;
  StaticClassMask static_mask = StaticClassMask::semantic_kitti();
  bool playback = false;
  double pose_noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;

  bool use_comp_loss = true;
  bool use_sem_loss = true;
  bool use_moment = true;
  bool use_gradual = true;

  /// Backpropagate the gradual loss through the pass stored at step j instead
  /// of recomputing it with the current parameters.
  bool stale_gradual_graph = false;

  int gradual_iters() const { return iters_gradual < 0 ? iters_per_step : iters_gradual; }
  bool adapts() const { return !playback && (use_moment || use_gradual); }
  void validate() const;
};

/// Ring of the most recent per-step records, evicted oldest first.
class AdaptBuffer {
 public:
  struct Record {
    std::int64_t step = 0;
    PointCloudd cloud;
    Posed pose;
    ProbGridd p_moment;       // moment prediction before that step's update
    ForwardPass pass_gradual; // gradual prediction and its replay, before update
  };

  explicit AdaptBuffer(std::size_t capacity);

  void push(Record r);
  const Record* find(std::int64_t step) const;
  std::size_t size() const { return records_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::optional<std::int64_t> oldest() const;

 private:
  std::size_t capacity_;
  std::deque<Record> records_;
};

/// Final label: the gradual argmax where it is a static class, the moment
/// argmax elsewhere (including where the gradual model predicts empty).
LabelGrid agg(const ProbGridd& p_m, const ProbGridd& p_g, const StaticClassMask& mask);

struct StepDiagnostics {
  bool adapted = false;
  LossValue<double> moment_loss;   // last inner iteration
  LossValue<double> gradual_loss;  // last inner iteration
  CompMapStats comp_stats;
  double seconds = 0.0;
};

struct StepResult {
  std::int64_t step = 0;
  LabelGrid prediction;
  ProbGridd p_moment;
  ProbGridd p_gradual;
  StepDiagnostics diag;
};

class TtaScheduler {
 public:
  TtaScheduler(const SscModel& pretrained, SchedulerConfig config);

  /// Processes observation `index` (strictly increasing) and returns its
  /// final prediction.
  StepResult step(std::int64_t index, const PointCloudd& x, const Posed& pose_world);

  const SchedulerConfig& config() const { return config_; }
  const SscModel& base_model() const { return *base_; }
  const SscModel& gradual_model() const { return *gradual_; }
  std::optional<std::int64_t> last_step() const { return last_step_; }

  /// θ^G serialized in the model's checkpoint format.
  std::string snapshot_gradual() const;
  /// Replaces θ^G; the snapshot must describe a model of the same grid spec.
  void restore_gradual(const std::string& snapshot);

  /// θ^G + config + step counter + gradual optimizer state.
  void save_checkpoint(const std::string& path) const;
  static TtaScheduler load_checkpoint(const std::string& path, const SscModel& pretrained);

 private:
  struct Supervision {
    LabelGrid comp;
    LabelGrid sem;
  };

  LossValue<double> update(SscModel& model, AdamState<double>& adam, const ForwardPass& pass,
                           const Supervision& sup) const;

  SchedulerConfig config_;
  std::unique_ptr<SscModel> base_;
  std::unique_ptr<SscModel> gradual_;
  AdamState<double> gradual_adam_;
  AdaptBuffer buffer_;
  std::optional<std::int64_t> first_step_;
  std::optional<std::int64_t> last_step_;
};

/// Reads any checkpoint written by a built-in model's save().
std::unique_ptr<SscModel> load_model(std::istream& is);
std::unique_ptr<SscModel> load_model_file(const std::string& path);

}  // namespace losadapt

#endif  // LOSADAPT_SCHEDULER_HPP_
