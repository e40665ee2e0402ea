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

#include "losadapt/los_supervision.hpp"

#include <algorithm>

namespace losadapt {

StaticClassMask::StaticClassMask(std::vector<bool> flags) : flags_(std::move(flags)) {
  if (!flags_.empty()) flags_[0] = false;
}

StaticClassMask StaticClassMask::semantic_kitti() {
  std::vector<bool> flags(20, false);
  for (int c = 9; c <= 19; ++c) flags[c] = true;
  return StaticClassMask(std::move(flags));
}

StaticClassMask StaticClassMask::from_static_classes(int num_classes,
                                                     const std::vector<int>& static_classes) {
  std::vector<bool> flags(num_classes + 1, false);
  for (int c : static_classes) {
    if (c < 1 || c > num_classes) throw InvalidArgument("static class index out of range");
    flags[c] = true;
  }
  return StaticClassMask(std::move(flags));
}

std::vector<std::uint8_t> classify_points(const PointCloudd& x, const ProbGridd& p_j) {
  std::vector<std::uint8_t> out(x.size(), kIgnoreLabel);
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    const auto v = point_to_voxel(x.points.col(n), p_j.spec);
    if (!v) continue;
    const auto col = p_j.probs.col(p_j.spec.linear(*v));
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < col.size(); ++c) {
      if (col[c] > col[best]) best = c;
    }
    out[n] = static_cast<std::uint8_t>(best);
  }
  return out;
}

LabelGrid build_comp_map(const PointCloudd& x_trans, std::span<const std::uint8_t> point_classes,
                         const Eigen::Vector3d& sensor_origin, const StaticClassMask& mask,
                         const GridSpec& spec, CompMapStats* stats) {
  if (static_cast<Eigen::Index>(point_classes.size()) != x_trans.size())
    throw InvalidArgument("build_comp_map: point/class count mismatch");

  CompMapStats local;
  LabelGrid out(spec, kIgnoreLabel);
  std::vector<std::int64_t> targets;
  targets.reserve(point_classes.size());

  for (Eigen::Index n = 0; n < x_trans.size(); ++n) {
    const std::uint8_t cls = point_classes[n];
    if (cls == kEmptyClass) {
      ++local.rejected_empty_class;
      continue;
    }
    if (!mask.is_static(cls)) {
      ++local.rejected_movable;
      continue;
    }
    const auto v = point_to_voxel(x_trans.points.col(n), spec);
    if (!v) {
      ++local.out_of_bounds;
      continue;
    }
    ++local.static_points;
    const std::int64_t idx = spec.linear(*v);
    out.values[idx] = 1;
    targets.push_back(idx);
  }

  // Rays end at voxel centers, so one ray per distinct target voxel suffices.
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  const Eigen::Vector3d origin_vox = (sensor_origin - spec.origin) / spec.voxel_size;
  for (std::int64_t idx : targets) {
    ++local.rays;
    for (const VoxelIndex& v : los_traverse(origin_vox, spec.unravel(idx), spec)) {
      auto& cell = out.values[spec.linear(v)];
      if (cell != 1) cell = 0;
    }
  }
  if (stats) *stats = local;
  return out;
}

}  // namespace losadapt
