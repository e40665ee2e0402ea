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

#include "losadapt/grid.hpp"

namespace losadapt {
namespace {

GridSpec small_spec(int c = 2) {
  GridSpec s;
  s.dims = {4, 3, 2};
  s.origin = Eigen::Vector3d(0.0, 0.0, 0.0);
  s.voxel_size = 1.0;
  s.num_classes = c;
  return s;
}

TEST(PointToVoxel, OriginCornerIsFirstVoxel) {
  const auto v = point_to_voxel(Eigen::Vector3d(0.0, -25.6, -2.0), GridSpec::semantic_kitti());
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(*v, (VoxelIndex{0, 0, 0}));
}

TEST(PointToVoxel, FarCornerIsLastVoxel) {
  const auto v = point_to_voxel(Eigen::Vector3d(51.19, 25.59, 4.39), GridSpec::semantic_kitti());
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(*v, (VoxelIndex{255, 255, 31}));
}

TEST(PointToVoxel, BelowOriginIsOutOfBounds) {
  EXPECT_FALSE(point_to_voxel(Eigen::Vector3d(-0.1, 0.0, 0.0), GridSpec::semantic_kitti()).has_value());
}

TEST(PointToVoxel, UpperFaceIsOutOfBounds) {
  EXPECT_FALSE(point_to_voxel(Eigen::Vector3d(51.2, 0.0, 0.0), GridSpec::semantic_kitti()).has_value());
  EXPECT_FALSE(point_to_voxel(Eigen::Vector3d(1e300, 0.0, 0.0), GridSpec::semantic_kitti()).has_value());
}

TEST(PointToVoxel, NonFiniteIsRejected) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(point_to_voxel(Eigen::Vector3d(nan, 0.0, 0.0), GridSpec::semantic_kitti()), RejectedPoint);
  EXPECT_THROW(point_to_voxel(Eigen::Vector3d(0.0, std::numeric_limits<double>::infinity(), 0.0),
                              GridSpec::semantic_kitti()),
               RejectedPoint);
}

TEST(PointToVoxel, VoxelCenterRoundTripsEverywhere) {
  GridSpec s;
  s.dims = {17, 9, 5};
  s.origin = Eigen::Vector3d(-3.3, 1.7, -0.9);
  s.voxel_size = 0.37;
  for (std::int64_t k = 0; k < s.num_voxels(); ++k) {
    const VoxelIndex v = s.unravel(k);
    const auto back = point_to_voxel(s.voxel_center(v), s);
    ASSERT_TRUE(back.has_value());
    ASSERT_EQ(*back, v);
  }
}

TEST(PointToVoxel, DefaultSpecCenterRoundTrip) {
  const GridSpec s = GridSpec::semantic_kitti();
  std::mt19937_64 rng(3);
  for (int n = 0; n < 20000; ++n) {
    const VoxelIndex v{static_cast<int>(rng() % 256), static_cast<int>(rng() % 256), static_cast<int>(rng() % 32)};
    ASSERT_EQ(point_to_voxel(s.voxel_center(v), s).value(), v);
  }
}

TEST(GridSpec, LinearOrderIsXFastest) {
  const GridSpec s = small_spec();
  EXPECT_EQ(s.linear({1, 0, 0}), 1);
  EXPECT_EQ(s.linear({0, 1, 0}), 4);
  EXPECT_EQ(s.linear({0, 0, 1}), 12);
  for (std::int64_t k = 0; k < s.num_voxels(); ++k) EXPECT_EQ(s.linear(s.unravel(k)), k);
}

TEST(GridSpec, ValidateRejectsBadValues) {
  GridSpec s = small_spec();
  s.dims[1] = 0;
  EXPECT_THROW(s.validate(), InvalidArgument);
  s = small_spec();
  s.voxel_size = 0.0;
  EXPECT_THROW(s.validate(), InvalidArgument);
  s = small_spec();
  s.num_classes = 0;
  EXPECT_THROW(s.validate(), InvalidArgument);
  EXPECT_NO_THROW(GridSpec::semantic_kitti().validate());
}

TEST(LabelGrid, SizeMatchesSpec) {
  const LabelGrid g(small_spec(), kIgnoreLabel);
  EXPECT_EQ(g.values.size(), 24);
  EXPECT_TRUE((g.values == kIgnoreLabel).all());
}

TEST(ProbGrid, RejectsWrongShape) {
  EXPECT_THROW(ProbGridd(small_spec(), Eigen::MatrixXd::Zero(2, 24)), SpecMismatch);
  EXPECT_THROW(ProbGridd(small_spec(), Eigen::MatrixXd::Zero(3, 23)), SpecMismatch);
}

TEST(ProbGrid, UniformIsValid) {
  const auto p = ProbGridd::uniform(small_spec());
  EXPECT_TRUE(p.is_valid());
  EXPECT_DOUBLE_EQ(p.probs(0, 0), 1.0 / 3.0);
}

TEST(ArgmaxLabels, UniformTiesGoToLowestClass) {
  const LabelGrid l = argmax_labels(ProbGridd::uniform(small_spec()));
  EXPECT_TRUE((l.values == 0).all());
}

TEST(ArgmaxLabels, PicksLargest) {
  GridSpec s = small_spec();
  s.dims = {1, 1, 1};
  Eigen::MatrixXd m(3, 1);
  m << 0.1, 0.7, 0.2;
  EXPECT_EQ(argmax_labels(ProbGridd(s, m)).values[0], 1);
}

TEST(ArgmaxLabels, OneHotLastClass) {
  const GridSpec s = small_spec();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, s.num_voxels());
  m.row(2).setOnes();
  EXPECT_TRUE((argmax_labels(ProbGridd(s, m)).values == 2).all());
}

TEST(ArgmaxLabels, NeverEmitsIgnore) {
  GridSpec s = small_spec(254);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(s.channels(), s.num_voxels());
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
  m.array().rowwise() /= m.colwise().sum().array();
  const LabelGrid l = argmax_labels(ProbGridd(s, m));
  EXPECT_TRUE((l.values != kIgnoreLabel).all());
}

TEST(BinaryCompletion, Examples) {
  GridSpec s = small_spec();
  s.dims = {3, 1, 1};
  Eigen::MatrixXd m(3, 3);
  m << 0.5, 1.0, 0.2,
       0.3, 0.0, 0.1,
       0.2, 0.0, 0.7;
  const Eigen::Matrix2Xd b = to_binary_completion(ProbGridd(s, m));
  EXPECT_EQ(b(0, 0), 0.5);
  EXPECT_EQ(b(1, 0), 0.3);
  EXPECT_EQ(b(0, 1), 1.0);
  EXPECT_EQ(b(1, 1), 0.0);
  EXPECT_EQ(b(0, 2), 0.2);
  EXPECT_EQ(b(1, 2), 0.7);
}

TEST(BinaryCompletion, SecondChannelIsExactMaxOfNonEmpty) {
  const GridSpec s = small_spec(5);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(s.channels(), s.num_voxels());
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
  m.array().rowwise() /= m.colwise().sum().array();
  const Eigen::Matrix2Xd b = to_binary_completion(ProbGridd(s, m));
  for (Eigen::Index v = 0; v < m.cols(); ++v) {
    double best = 0.0;
    for (int c = 1; c < s.channels(); ++c) best = std::max(best, m(c, v));
    EXPECT_EQ(b(1, v), best);
    EXPECT_EQ(b(0, v), m(0, v));
    EXPECT_GE(b(1, v), 0.0);
    EXPECT_LE(b(1, v), 1.0);
  }
}

}  // namespace
}  // namespace losadapt
