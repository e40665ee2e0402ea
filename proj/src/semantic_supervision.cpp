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

#include "losadapt/semantic_supervision.hpp"

#include <vector>

namespace losadapt {

LabelGrid aggregate_pseudo_gt(const LabelGrid& a_cur, const LabelGrid& a_proj) {
  require_compatible(a_cur.spec, a_proj.spec, "aggregate_pseudo_gt");
  LabelGrid out = a_cur;
  for (Eigen::Index v = 0; v < out.values.size(); ++v) {
    const std::uint8_t cur = a_cur.values[v];
    const std::uint8_t proj = a_proj.values[v];
    if (cur == kIgnoreLabel) {
      out.values[v] = proj;
    } else if (proj != kIgnoreLabel && proj != cur) {
      out.values[v] = kIgnoreLabel;
    }
  }
  return out;
}

LabelGrid project_labels(const LabelGrid& a, const Posed& t) {
  const GridSpec& spec = a.spec;
  LabelGrid out(spec, kIgnoreLabel);
  std::vector<double> best_dist(static_cast<std::size_t>(spec.num_voxels()),
                                std::numeric_limits<double>::infinity());

  for (std::int64_t src = 0; src < spec.num_voxels(); ++src) {
    const std::uint8_t label = a.values[src];
    if (label == kIgnoreLabel) continue;
    const Eigen::Vector3d moved = t.apply(spec.voxel_center(spec.unravel(src)));
    const auto dst = point_to_voxel(moved, spec);
    if (!dst) continue;
    const std::int64_t d = spec.linear(*dst);
    const double dist = (moved - spec.voxel_center(*dst)).norm();
    auto& cell = out.values[d];
    if (dist < best_dist[d] || (dist == best_dist[d] && label < cell)) {
      best_dist[d] = dist;
      cell = label;
    }
  }
  return out;
}

}  // namespace losadapt
