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

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "losadapt/config.hpp"
#include "losadapt/scheduler.hpp"
#include "losadapt/synthetic.hpp"

namespace losadapt {
namespace {

GridSpec small_grid() {
  GridSpec s = synthetic_grid_spec();
  s.dims = {32, 32, 8};
  s.origin = Eigen::Vector3d(0.0, -6.4, -2.0);
  return s;
}

std::vector<Frame> frames_for(std::uint64_t seed, int n, int rays = 2048) {
  StreetOptions opt;
  opt.seed = seed;
  opt.yaw_rate = seed % 2 ? 0.01 : 0.0;
  SyntheticSequence seq(make_street_world(opt), small_grid(), n, rays, seed);
  std::vector<Frame> out;
  while (auto f = seq.next()) out.push_back(std::move(*f));
  return out;
}

ToyVoxelModel base_model(std::uint64_t seed) {
  const GridSpec s = small_grid();
  std::vector<TrainingSample> data;
  for (const Frame& f : frames_for(seed + 1000, 8)) data.push_back({f.cloud, *f.gt});
  return pretrain(ToyVoxelModel(s), data, 2, 0.1, seed);
}

SchedulerConfig fast_config() {
  SchedulerConfig c;
  c.lr_moment = 0.05;
  c.lr_gradual = 0.01;
  c.iters_per_step = 2;
  return c;
}

class SchedulerInvariants : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(SchedulerInvariants, MomentModelCarriesNothingAcrossSteps) {
  const std::uint64_t seed = GetParam();
  const auto frames = frames_for(seed, 10);
  const ToyVoxelModel m = base_model(seed);
  SchedulerConfig cfg = fast_config();
  cfg.frame_diff = 1 + static_cast<int>(seed % 2);
  TtaScheduler full(m, cfg);
  std::vector<ProbGridd> moment;
  for (const Frame& f : frames) moment.push_back(full.step(f.index, f.cloud, f.pose).p_moment);
  // Replaying only step i - frame_diff and step i reproduces p^M_i.
  for (std::size_t i = cfg.frame_diff; i < frames.size(); i += 3) {
    TtaScheduler pair(m, cfg);
    const Frame& j = frames[i - cfg.frame_diff];
    pair.step(j.index, j.cloud, j.pose);
    const StepResult r = pair.step(frames[i].index, frames[i].cloud, frames[i].pose);
    EXPECT_EQ(r.p_moment.probs, moment[i].probs) << "step " << i;
  }
}

TEST_P(SchedulerInvariants, PlaybackLeavesGradualUntouched) {
  const std::uint64_t seed = GetParam();
  const auto frames = frames_for(seed, 10);
  const ToyVoxelModel m = base_model(seed);
  TtaScheduler adapt(m, fast_config());
  for (const Frame& f : frames) adapt.step(f.index, f.cloud, f.pose);
  const std::string snap = adapt.snapshot_gradual();

  SchedulerConfig cfg = fast_config();
  cfg.playback = true;
  TtaScheduler play(m, cfg);
  play.restore_gradual(snap);
  for (const Frame& f : frames) {
    const StepResult r = play.step(f.index, f.cloud, f.pose);
    EXPECT_FALSE(r.diag.adapted);
    EXPECT_EQ(r.p_moment.probs, m.predict(f.cloud).probs);
  }
  EXPECT_EQ(play.snapshot_gradual(), snap);
}

TEST_P(SchedulerInvariants, ZeroIterationsNeverMoveGradual) {
  const std::uint64_t seed = GetParam();
  const auto frames = frames_for(seed, 10);
  const ToyVoxelModel m = base_model(seed);
  SchedulerConfig cfg = fast_config();
  cfg.iters_per_step = 0;
  TtaScheduler s(m, cfg);
  const Eigen::VectorXd theta0 = m.parameters();
  for (const Frame& f : frames) {
    const StepResult r = s.step(f.index, f.cloud, f.pose);
    ASSERT_EQ(s.gradual_model().parameters(), theta0);
    const ProbGridd p = m.predict(f.cloud);
    EXPECT_EQ(r.p_moment.probs, p.probs);
    EXPECT_EQ(r.prediction, agg(p, p, cfg.static_mask));
  }
}

TEST_P(SchedulerInvariants, OutputsDependOnlyOnThePast) {
  const std::uint64_t seed = GetParam();
  const auto a = frames_for(seed, 10);
  auto b = a;
  // Same history up to step 5, a different future.
  const auto other = frames_for(seed + 77, 10);
  for (std::size_t k = 6; k < b.size(); ++k) {
    b[k].cloud = other[k].cloud;
    b[k].pose = other[k].pose;
  }
  const ToyVoxelModel m = base_model(seed);
  TtaScheduler sa(m, fast_config());
  TtaScheduler sb(m, fast_config());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const StepResult ra = sa.step(a[k].index, a[k].cloud, a[k].pose);
    const StepResult rb = sb.step(b[k].index, b[k].cloud, b[k].pose);
    if (k <= 5) {
      EXPECT_EQ(ra.prediction, rb.prediction) << k;
      EXPECT_EQ(ra.p_gradual.probs, rb.p_gradual.probs) << k;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(RandomSequences, SchedulerInvariants, ::testing::Values(1u, 2u, 3u));

TEST(Scheduler, FirstStepDoesNotAdapt) {
  const auto frames = frames_for(5, 2);
  const ToyVoxelModel m = base_model(5);
  TtaScheduler s(m, fast_config());
  const StepResult r = s.step(frames[0].index, frames[0].cloud, frames[0].pose);
  EXPECT_FALSE(r.diag.adapted);
  const ProbGridd p = m.predict(frames[0].cloud);
  EXPECT_EQ(r.prediction, agg(p, p, StaticClassMask::semantic_kitti()));
  EXPECT_EQ(s.gradual_model().parameters(), m.parameters());
  EXPECT_TRUE(s.step(frames[1].index, frames[1].cloud, frames[1].pose).diag.adapted);
  EXPECT_NE(s.gradual_model().parameters(), m.parameters());
}

TEST(Scheduler, OutOfOrderStepThrows) {
  const auto frames = frames_for(6, 2);
  TtaScheduler s(base_model(6), fast_config());
  s.step(3, frames[0].cloud, frames[0].pose);
  EXPECT_THROW(s.step(3, frames[1].cloud, frames[1].pose), InvalidArgument);
  EXPECT_THROW(s.step(2, frames[1].cloud, frames[1].pose), InvalidArgument);
}

TEST(Scheduler, MissingSourceFrameIsABufferMiss) {
  const auto frames = frames_for(6, 4);
  TtaScheduler s(base_model(6), fast_config());
  s.step(0, frames[0].cloud, frames[0].pose);
  EXPECT_THROW(s.step(2, frames[2].cloud, frames[2].pose), Error);
}

TEST(Scheduler, FrameDiffZeroUsesCurrentMomentOnly) {
  const auto frames = frames_for(7, 3);
  const ToyVoxelModel m = base_model(7);
  SchedulerConfig cfg = fast_config();
  cfg.frame_diff = 0;
  TtaScheduler s(m, cfg);
  const StepResult r = s.step(frames[0].index, frames[0].cloud, frames[0].pose);
  EXPECT_TRUE(r.diag.adapted);
  EXPECT_EQ(r.diag.moment_loss.num_supervised_voxels > 0, true);
}

TEST(Scheduler, RejectsContradictoryConfig) {
  const ToyVoxelModel m = base_model(8);
  SchedulerConfig cfg = fast_config();
  cfg.use_comp_loss = false;
  cfg.use_sem_loss = false;
  EXPECT_THROW(TtaScheduler(m, cfg), InvalidArgument);
  cfg = fast_config();
  cfg.lr_moment = 0.0;
  EXPECT_THROW(TtaScheduler(m, cfg), InvalidArgument);
  cfg = fast_config();
  cfg.frame_diff = -1;
  EXPECT_THROW(TtaScheduler(m, cfg), InvalidArgument);
  cfg = fast_config();
  cfg.static_mask = StaticClassMask::from_static_classes(5, {1});
  EXPECT_THROW(TtaScheduler(m, cfg), SpecMismatch);
}

TEST(Scheduler, StaleGraphVariantRuns) {
  const auto frames = frames_for(9, 4);
  const ToyVoxelModel m = base_model(9);
  SchedulerConfig cfg = fast_config();
  cfg.stale_gradual_graph = true;
  TtaScheduler stale(m, cfg);
  TtaScheduler fresh(m, fast_config());
  for (const Frame& f : frames) {
    stale.step(f.index, f.cloud, f.pose);
    fresh.step(f.index, f.cloud, f.pose);
  }
  EXPECT_NE(stale.gradual_model().parameters(), m.parameters());
  EXPECT_NE(stale.gradual_model().parameters(), fresh.gradual_model().parameters());
}

TEST(Scheduler, MaskedAdaptationTouchesOnlyMaskedParameters) {
  const auto frames = frames_for(10, 4);
  ToyVoxelModel m = base_model(10);
  m.set_parameter_mask(m.calibration_mask());
  TtaScheduler s(m, fast_config());
  for (const Frame& f : frames) s.step(f.index, f.cloud, f.pose);
  const Eigen::VectorXd d = s.gradual_model().parameters() - m.parameters();
  const Eigen::VectorXd mask = m.calibration_mask();
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    if (mask[k] == 0.0) ASSERT_EQ(d[k], 0.0);
  }
  EXPECT_GT(d.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Scheduler, SnapshotRestoreReproducesPredictions) {
  const auto frames = frames_for(11, 5);
  const ToyVoxelModel m = base_model(11);
  TtaScheduler s(m, fast_config());
  for (const Frame& f : frames) s.step(f.index, f.cloud, f.pose);
  TtaScheduler t(m, fast_config());
  t.restore_gradual(s.snapshot_gradual());
  EXPECT_EQ(t.gradual_model().predict(frames[0].cloud).probs, s.gradual_model().predict(frames[0].cloud).probs);
  EXPECT_EQ(t.snapshot_gradual(), s.snapshot_gradual());
}

TEST(Scheduler, RestoreRejectsOtherModels) {
  const ToyVoxelModel m = base_model(12);
  TtaScheduler s(m, fast_config());
  GridSpec other = small_grid();
  other.dims = {16, 16, 8};
  TtaScheduler t(ToyVoxelModel(other), fast_config());
  EXPECT_THROW(s.restore_gradual(t.snapshot_gradual()), SpecMismatch);
  EXPECT_THROW(s.restore_gradual("garbage"), FormatError);
  EXPECT_THROW(s.restore_gradual(""), FormatError);
}

TEST(Scheduler, CheckpointRoundTrip) {
  const auto frames = frames_for(13, 6);
  const ToyVoxelModel m = base_model(13);
  TtaScheduler s(m, fast_config());
  for (int k = 0; k < 3; ++k) s.step(frames[k].index, frames[k].cloud, frames[k].pose);
  const auto path = std::filesystem::temp_directory_path() / "losadapt_sched_ckpt.bin";
  s.save_checkpoint(path.string());
  TtaScheduler r = TtaScheduler::load_checkpoint(path.string(), m);
  std::filesystem::remove(path);
  EXPECT_EQ(r.snapshot_gradual(), s.snapshot_gradual());
  EXPECT_EQ(r.last_step(), s.last_step());
  EXPECT_EQ(to_json(r.config()), to_json(s.config()));
  EXPECT_THROW(r.step(2, frames[2].cloud, frames[2].pose), InvalidArgument);
}

TEST(Agg, TrustRules) {
  GridSpec s = small_grid();
  s.dims = {3, 1, 1};
  ProbGridd pm(s, Eigen::MatrixXd::Zero(20, 3));
  ProbGridd pg(s, Eigen::MatrixXd::Zero(20, 3));
  pm.probs(1, 0) = 1.0;  // car
  pg.probs(9, 0) = 1.0;  // road
  pm.probs(13, 1) = 1.0;
  pg.probs(1, 1) = 1.0;  // movable: moment wins
  pm.probs(11, 2) = 1.0;
  pg.probs(0, 2) = 1.0;  // empty: moment wins
  const LabelGrid out = agg(pm, pg, StaticClassMask::semantic_kitti());
  EXPECT_EQ(out.values[0], 9);
  EXPECT_EQ(out.values[1], 13);
  EXPECT_EQ(out.values[2], 11);
  EXPECT_EQ(agg(pm, pm, StaticClassMask::semantic_kitti()), argmax_labels(pm));
  GridSpec t = s;
  t.dims = {1, 3, 1};
  EXPECT_THROW(agg(pm, ProbGridd(t, pg.probs), StaticClassMask::semantic_kitti()), SpecMismatch);
}

TEST(AdaptBuffer, EvictsOldestFirst) {
  AdaptBuffer b(2);
  for (std::int64_t k = 0; k < 4; ++k) b.push(AdaptBuffer::Record{k, {}, {}, {}, {}});
  EXPECT_EQ(b.oldest(), 2);
  EXPECT_EQ(b.find(1), nullptr);
  ASSERT_NE(b.find(3), nullptr);
  EXPECT_EQ(b.find(3)->step, 3);
  EXPECT_THROW(b.push(AdaptBuffer::Record{3, {}, {}, {}, {}}), InvalidArgument);
  EXPECT_THROW(AdaptBuffer(0), InvalidArgument);
}

TEST(SchedulerConfig, JsonRoundTrip) {
  SchedulerConfig c = fast_config();
  c.frame_diff = 3;
  c.tau_reliability = 0.6;
  c.pose_noise_sigma = 0.05;
  c.use_sem_loss = false;
  c.static_mask = StaticClassMask::from_static_classes(19, {9, 10, 13});
  const SchedulerConfig back = scheduler_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.static_mask.flags(), c.static_mask.flags());
  EXPECT_THROW(scheduler_config_from_json(Json{{"tau_reliability", 2.0}}), InvalidArgument);
}

}  // namespace
}  // namespace losadapt
