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

#include "losadapt/metrics.hpp"

namespace losadapt {
namespace {

GridSpec line_spec(int n, int classes = 2) {
  GridSpec s;
  s.dims = {n, 1, 1};
  s.num_classes = classes;
  return s;
}

LabelGrid grid_of(const GridSpec& s, std::initializer_list<int> v) {
  LabelGrid g(s, 0);
  int k = 0;
  for (int x : v) g.values[k++] = static_cast<std::uint8_t>(x);
  return g;
}

TEST(Metrics, HandWorkedExample) {
  const GridSpec s = line_spec(4);
  MetricAccumulator m(2);
  m.accumulate(grid_of(s, {1, 2, 0, 2}), grid_of(s, {1, 1, 0, 255}));
  // Voxel 3 is ignored. Class 1: hit at 0, union {0, 1}. Class 2: predicted
  // at 1 only. Occupancy agrees on {0, 1}.
  EXPECT_EQ(m.intersection(1), 1);
  EXPECT_EQ(m.union_count(1), 2);
  EXPECT_EQ(m.intersection(2), 0);
  EXPECT_EQ(m.union_count(2), 1);
  EXPECT_DOUBLE_EQ(*m.class_iou(1), 0.5);
  EXPECT_DOUBLE_EQ(*m.class_iou(2), 0.0);
  EXPECT_DOUBLE_EQ(m.miou(), 0.25);
  EXPECT_EQ(m.binary_intersection(), 2);
  EXPECT_EQ(m.binary_union(), 2);
  EXPECT_DOUBLE_EQ(m.ciou(), 1.0);
  EXPECT_EQ(m.valid_voxels(), 3);
  EXPECT_EQ(m.frames(), 1);
}

TEST(Metrics, PerfectPrediction) {
  const GridSpec s = line_spec(5, 3);
  MetricAccumulator m(3);
  m.accumulate(grid_of(s, {0, 1, 3, 3, 2}), grid_of(s, {0, 1, 3, 3, 255}));
  EXPECT_DOUBLE_EQ(m.miou(), 1.0);
  EXPECT_DOUBLE_EQ(m.ciou(), 1.0);
  EXPECT_FALSE(m.class_iou(2).has_value());
}

TEST(Metrics, AllEmptyPrediction) {
  const GridSpec s = line_spec(4);
  MetricAccumulator m(2);
  m.accumulate(LabelGrid(s, 0), grid_of(s, {1, 2, 0, 0}));
  EXPECT_DOUBLE_EQ(m.miou(), 0.0);
  EXPECT_DOUBLE_EQ(m.ciou(), 0.0);
}

TEST(Metrics, NothingToScore) {
  MetricAccumulator m(2);
  EXPECT_DOUBLE_EQ(m.miou(), 0.0);
  EXPECT_DOUBLE_EQ(m.ciou(), 0.0);
  const GridSpec s = line_spec(2);
  m.accumulate(LabelGrid(s, 0), LabelGrid(s, 0));
  EXPECT_DOUBLE_EQ(m.miou(), 0.0);
  EXPECT_EQ(m.valid_voxels(), 2);
}

TEST(Metrics, MergeEqualsJointAccumulation) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> label(0, 4);
  const GridSpec s = line_spec(50, 3);
  std::vector<std::pair<LabelGrid, LabelGrid>> frames;
  for (int f = 0; f < 6; ++f) {
    LabelGrid p(s, 0), g(s, 0);
    for (int k = 0; k < 50; ++k) {
      p.values[k] = static_cast<std::uint8_t>(std::min(label(rng), 3));
      const int l = label(rng);
      g.values[k] = static_cast<std::uint8_t>(l == 4 ? 255 : l);
    }
    frames.emplace_back(p, g);
  }
  MetricAccumulator all(3), a(3), b(3), c(3);
  for (int f = 0; f < 6; ++f) {
    all.accumulate(frames[f].first, frames[f].second);
    (f < 2 ? a : f < 4 ? b : c).accumulate(frames[f].first, frames[f].second);
  }
  MetricAccumulator left = a;
  left.merge(b);
  left.merge(c);
  MetricAccumulator bc = b;
  bc.merge(c);
  MetricAccumulator right = a;
  right.merge(bc);
  EXPECT_EQ(left, all);
  EXPECT_EQ(right, all);
  EXPECT_EQ(all.frames(), 6);
}

TEST(Metrics, Errors) {
  MetricAccumulator m(2);
  EXPECT_THROW(m.accumulate(LabelGrid(line_spec(3), 0), LabelGrid(line_spec(4), 0)), SpecMismatch);
  EXPECT_THROW(m.merge(MetricAccumulator(3)), SpecMismatch);
  EXPECT_THROW(m.accumulate(LabelGrid(line_spec(3, 5), 0), LabelGrid(line_spec(3, 5), 0)), SpecMismatch);
  EXPECT_THROW(m.class_iou(0), InvalidArgument);
  EXPECT_THROW(m.accumulate(grid_of(line_spec(2), {3, 0}), LabelGrid(line_spec(2), 0)), InvalidArgument);
  EXPECT_THROW(m.accumulate(LabelGrid(line_spec(2), 0), grid_of(line_spec(2), {7, 0})), InvalidArgument);
  EXPECT_THROW(MetricAccumulator(0), InvalidArgument);
}

}  // namespace
}  // namespace losadapt
