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

#ifndef LOSADAPT_LOS_SUPERVISION_HPP_
#define LOSADAPT_LOS_SUPERVISION_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "losadapt/geometry.hpp"
#include "losadapt/grid.hpp"

namespace losadapt {

/// Partition of labels into static (immovable) and movable. Index 0 (empty)
/// is never static; 255 and anything past the table are not static either.
class StaticClassMask {
 public:
  StaticClassMask() = default;
  explicit StaticClassMask(std::vector<bool> flags);

  /// 19-class SemanticKITTI taxonomy: 1-8 movable, 9-19 static.
  static StaticClassMask semantic_kitti();
  /// Static classes listed explicitly; `num_classes` is C.
  static StaticClassMask from_static_classes(int num_classes, const std::vector<int>& static_classes);

  bool is_static(std::uint8_t label) const {
    return label < flags_.size() && flags_[label];
  }
  int channels() const { return static_cast<int>(flags_.size()); }
  const std::vector<bool>& flags() const { return flags_; }

 private:
  std::vector<bool> flags_;
};

struct CompMapStats {
  std::int64_t static_points = 0;
  std::int64_t rejected_movable = 0;
  std::int64_t rejected_empty_class = 0;  // points whose predicted class was 0
  std::int64_t out_of_bounds = 0;
  std::int64_t rays = 0;
};

/// Per-point argmax class of `p_j` at the point's voxel; 255 outside the grid.
std::vector<std::uint8_t> classify_points(const PointCloudd& x, const ProbGridd& p_j);

/// Binary completion supervision {0, 1, 255} from a cloud already expressed in
/// the target frame. Voxels holding a static-class point become 1; voxels
/// strictly between `sensor_origin` (meters, target frame) and each such
/// point's voxel become 0 unless already 1; everything else stays 255.
LabelGrid build_comp_map(const PointCloudd& x_trans, std::span<const std::uint8_t> point_classes,
                         const Eigen::Vector3d& sensor_origin, const StaticClassMask& mask,
                         const GridSpec& spec, CompMapStats* stats = nullptr);

}  // namespace losadapt

#endif  // LOSADAPT_LOS_SUPERVISION_HPP_
