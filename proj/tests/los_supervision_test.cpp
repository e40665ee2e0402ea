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

#include <random>
#include <set>

#include "losadapt/los_supervision.hpp"

namespace losadapt {
namespace {

using Vec3 = Eigen::Vector3d;

GridSpec spec_n(int n, double voxel = 0.5) {
  GridSpec s;
  s.dims = {n, n, n};
  s.origin = Vec3(-1.0, -2.0, -3.0);
  s.voxel_size = voxel;
  s.num_classes = 19;
  return s;
}

PointCloudd cloud_of(const std::vector<Vec3>& pts) {
  PointCloudd x;
  x.points.resize(3, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) x.points.col(static_cast<Eigen::Index>(k)) = pts[k];
  return x;
}

// Voxels the segment a -> b (meters) passes through, sampled every voxel/100.
std::set<std::int64_t> sampled_voxels(const Vec3& a, const Vec3& b, const GridSpec& s) {
  std::set<std::int64_t> out;
  const int n = static_cast<int>(std::ceil((b - a).norm() / s.voxel_size * 100.0)) + 1;
  for (int k = 0; k <= n; ++k) {
    const Vec3 p = a + (b - a) * (static_cast<double>(k) / n);
    if (const auto v = point_to_voxel(p, s)) out.insert(s.linear(*v));
  }
  return out;
}

double overlap_length(const Vec3& a, const Vec3& b, const VoxelIndex& v, const GridSpec& s) {
  double t0 = 0.0;
  double t1 = 1.0;
  const Vec3 d = b - a;
  const Vec3 lo = s.origin + s.voxel_size * Vec3(v.ix, v.iy, v.iz);
  for (int k = 0; k < 3; ++k) {
    if (d[k] == 0.0) {
      if (a[k] < lo[k] || a[k] > lo[k] + s.voxel_size) return 0.0;
      continue;
    }
    double ta = (lo[k] - a[k]) / d[k];
    double tb = (lo[k] + s.voxel_size - a[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return std::max(0.0, t1 - t0);
}

TEST(StaticClassMask, SemanticKittiPartition) {
  const StaticClassMask m = StaticClassMask::semantic_kitti();
  EXPECT_EQ(m.channels(), 20);
  EXPECT_FALSE(m.is_static(0));
  for (int c = 1; c <= 8; ++c) EXPECT_FALSE(m.is_static(c));
  for (int c = 9; c <= 19; ++c) EXPECT_TRUE(m.is_static(c));
  EXPECT_FALSE(m.is_static(kIgnoreLabel));
}

TEST(StaticClassMask, EmptyClassNeverStatic) {
  const StaticClassMask m(std::vector<bool>{true, true, false});
  EXPECT_FALSE(m.is_static(0));
  EXPECT_TRUE(m.is_static(1));
  EXPECT_THROW(StaticClassMask::from_static_classes(3, {4}), InvalidArgument);
  EXPECT_THROW(StaticClassMask::from_static_classes(3, {0}), InvalidArgument);
}

TEST(ClassifyPoints, Examples) {
  GridSpec s = spec_n(4, 1.0);
  s.origin = Vec3::Zero();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(20, s.num_voxels());
  m.row(0).setOnes();
  m.col(s.linear({1, 2, 3})).setZero();
  m(9, s.linear({1, 2, 3})) = 1.0;
  const ProbGridd p(s, m);
  const auto cls = classify_points(cloud_of({Vec3(1.2, 2.7, 3.5), Vec3(1.9, 2.1, 3.0), Vec3(-0.5, 0, 0),
                                             Vec3(0.5, 0.5, 0.5)}),
                                   p);
  EXPECT_EQ(cls, (std::vector<std::uint8_t>{9, 9, kIgnoreLabel, 0}));
}

TEST(BuildCompMap, EmptyCloudIsAllIgnore) {
  const GridSpec s = spec_n(8);
  const LabelGrid g = build_comp_map(PointCloudd{}, {}, Vec3::Zero(), StaticClassMask::semantic_kitti(), s);
  EXPECT_TRUE((g.values == kIgnoreLabel).all());
}

TEST(BuildCompMap, MovablePointIsDiscarded) {
  const GridSpec s = spec_n(8);
  const std::vector<std::uint8_t> cls = {1};
  CompMapStats st;
  const LabelGrid g =
      build_comp_map(cloud_of({Vec3(1.1, 0.3, -1.2)}), cls, s.origin, StaticClassMask::semantic_kitti(), s, &st);
  EXPECT_TRUE((g.values == kIgnoreLabel).all());
  EXPECT_EQ(st.rejected_movable, 1);
}

TEST(BuildCompMap, EmptyClassPointIsDiscarded) {
  const GridSpec s = spec_n(8);
  const std::vector<std::uint8_t> cls = {0};
  CompMapStats st;
  const LabelGrid g =
      build_comp_map(cloud_of({Vec3(1.1, 0.3, -1.2)}), cls, s.origin, StaticClassMask::semantic_kitti(), s, &st);
  EXPECT_TRUE((g.values == kIgnoreLabel).all());
  EXPECT_EQ(st.rejected_empty_class, 1);
}

TEST(BuildCompMap, SinglePointFromCorner) {
  const GridSpec s = spec_n(8);
  const VoxelIndex target{6, 4, 5};
  const Vec3 point = s.voxel_center(target) + Vec3(0.1, -0.05, 0.2);
  const Vec3 sensor = s.origin + Vec3(0.01, 0.02, 0.03);
  const std::vector<std::uint8_t> cls = {13};
  const LabelGrid g = build_comp_map(cloud_of({point}), cls, sensor, StaticClassMask::semantic_kitti(), s);

  const Vec3 origin_vox = (sensor - s.origin) / s.voxel_size;
  std::set<std::int64_t> expected;
  for (const VoxelIndex& v : los_traverse(origin_vox, target, s)) expected.insert(s.linear(v));
  for (std::int64_t k = 0; k < s.num_voxels(); ++k) {
    if (k == s.linear(target)) {
      EXPECT_EQ(g.values[k], 1);
    } else if (expected.count(k)) {
      EXPECT_EQ(g.values[k], 0);
    } else {
      EXPECT_EQ(g.values[k], kIgnoreLabel);
    }
  }
  EXPECT_FALSE(expected.empty());
}

TEST(BuildCompMap, OccupiedWinsOverCarving) {
  const GridSpec s = spec_n(8);
  // A near point lies on the ray to a far point behind it.
  const Vec3 sensor = s.voxel_center({0, 0, 0});
  const std::vector<Vec3> pts = {s.voxel_center({3, 0, 0}), s.voxel_center({6, 0, 0})};
  const std::vector<std::uint8_t> cls = {9, 9};
  const LabelGrid g = build_comp_map(cloud_of(pts), cls, sensor, StaticClassMask::semantic_kitti(), s);
  EXPECT_EQ(g({3, 0, 0}), 1);
  EXPECT_EQ(g({6, 0, 0}), 1);
  EXPECT_EQ(g({1, 0, 0}), 0);
  EXPECT_EQ(g({4, 0, 0}), 0);
  EXPECT_EQ(g({0, 0, 0}), kIgnoreLabel);
  EXPECT_EQ(g({7, 0, 0}), kIgnoreLabel);
}

TEST(BuildCompMap, LengthMismatchThrows) {
  const GridSpec s = spec_n(8);
  const std::vector<std::uint8_t> cls = {9, 9};
  EXPECT_THROW(build_comp_map(cloud_of({Vec3::Zero()}), cls, Vec3::Zero(), StaticClassMask::semantic_kitti(), s),
               InvalidArgument);
}

TEST(BuildCompMap, RandomScenesAgreeWithSegmentOracle) {
  const GridSpec s = spec_n(24, 0.4);
  const StaticClassMask mask = StaticClassMask::semantic_kitti();
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> cls_dist(0, 19);
  const Vec3 extent = s.voxel_size * Vec3(24, 24, 24);
  for (int scene = 0; scene < 30; ++scene) {
    const Vec3 sensor = s.origin + Vec3(u(rng) * 1.4 - 0.2, u(rng) * 1.4 - 0.2, u(rng) * 1.4 - 0.2).cwiseProduct(extent);
    std::vector<Vec3> pts;
    std::vector<std::uint8_t> cls;
    for (int n = 0; n < 40; ++n) {
      pts.push_back(s.origin + Vec3(u(rng) * 1.1, u(rng) * 1.1, u(rng) * 1.1).cwiseProduct(extent));
      cls.push_back(static_cast<std::uint8_t>(cls_dist(rng)));
    }
    const LabelGrid g = build_comp_map(cloud_of(pts), cls, sensor, mask, s);

    std::set<std::int64_t> occupied;
    std::vector<Vec3> centers;
    for (std::size_t n = 0; n < pts.size(); ++n) {
      if (!mask.is_static(cls[n])) continue;
      const auto v = point_to_voxel(pts[n], s);
      if (!v) continue;
      occupied.insert(s.linear(*v));
      centers.push_back(s.voxel_center(*v));
    }
    const auto sensor_voxel = point_to_voxel(sensor, s);
    std::set<std::int64_t> sampled;
    for (const Vec3& c : centers) {
      for (std::int64_t k : sampled_voxels(sensor, c, s)) {
        if (!occupied.count(k) && !(sensor_voxel && k == s.linear(*sensor_voxel))) sampled.insert(k);
      }
    }
    for (std::int64_t k = 0; k < s.num_voxels(); ++k) {
      const std::uint8_t val = g.values[k];
      ASSERT_TRUE(val == 0 || val == 1 || val == kIgnoreLabel);
      ASSERT_EQ(val == 1, occupied.count(k) == 1);
      if (val == 0) {
        bool hit = false;
        for (const Vec3& c : centers) hit = hit || overlap_length(sensor, c, s.unravel(k), s) > 0.0;
        ASSERT_TRUE(hit) << "carved voxel off every segment";
      }
      if (sampled.count(k)) ASSERT_EQ(val, 0) << "sampled segment voxel not carved";
    }
  }
}

TEST(BuildCompMap, Deterministic) {
  const GridSpec s = spec_n(16);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 6.0);
  std::vector<Vec3> pts;
  std::vector<std::uint8_t> cls;
  for (int n = 0; n < 300; ++n) {
    pts.push_back(Vec3(u(rng), u(rng), u(rng)));
    cls.push_back(static_cast<std::uint8_t>(n % 20));
  }
  const auto mask = StaticClassMask::semantic_kitti();
  EXPECT_EQ(build_comp_map(cloud_of(pts), cls, Vec3(0.1, 0.2, 0.3), mask, s),
            build_comp_map(cloud_of(pts), cls, Vec3(0.1, 0.2, 0.3), mask, s));
}

}  // namespace
}  // namespace losadapt
