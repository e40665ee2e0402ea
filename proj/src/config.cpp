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

#include "losadapt/config.hpp"

namespace losadapt {
namespace {

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

Json to_json(const GridSpec& spec) {
  return Json{{"dims", {spec.dims[0], spec.dims[1], spec.dims[2]}},
              {"origin", {spec.origin.x(), spec.origin.y(), spec.origin.z()}},
              {"voxel_size", spec.voxel_size},
              {"num_classes", spec.num_classes}};
}

GridSpec grid_spec_from_json(const Json& j, GridSpec spec) {
  if (j.contains("dims")) {
    const auto d = j.at("dims").get<std::vector<int>>();
    if (d.size() != 3) throw InvalidArgument("grid.dims needs three entries");
    spec.dims = {d[0], d[1], d[2]};
  }
  if (j.contains("origin")) {
    const auto o = j.at("origin").get<std::vector<double>>();
    if (o.size() != 3) throw InvalidArgument("grid.origin needs three entries");
    spec.origin = Eigen::Vector3d(o[0], o[1], o[2]);
  }
  read_opt(j, "voxel_size", spec.voxel_size);
  read_opt(j, "num_classes", spec.num_classes);
  spec.validate();
  return spec;
}

Json to_json(const StaticClassMask& mask) {
  std::vector<int> ids;
  for (int c = 0; c < mask.channels(); ++c) {
    if (mask.is_static(static_cast<std::uint8_t>(c))) ids.push_back(c);
  }
  return Json{{"num_classes", mask.channels() - 1}, {"static_classes", ids}};
}

StaticClassMask static_mask_from_json(const Json& j) {
  return StaticClassMask::from_static_classes(j.at("num_classes").get<int>(),
                                              j.at("static_classes").get<std::vector<int>>());
}

Json to_json(const SchedulerConfig& c) {
  return Json{{"frame_diff", c.frame_diff},
              {"iters_per_step", c.iters_per_step},
              {"iters_gradual", c.iters_gradual},
              {"lr_moment", c.lr_moment},
              {"lr_gradual", c.lr_gradual},
              {"tau_reliability", c.tau_reliability},
              {"static_mask", to_json(c.static_mask)},
              {"playback", c.playback},
              {"pose_noise_sigma", c.pose_noise_sigma},
              {"noise_seed", c.noise_seed},
              {"use_comp_loss", c.use_comp_loss},
              {"use_sem_loss", c.use_sem_loss},
              {"use_moment", c.use_moment},
              {"use_gradual", c.use_gradual},
              {"stale_gradual_graph", c.stale_gradual_graph}};
}

SchedulerConfig scheduler_config_from_json(const Json& j, SchedulerConfig c) {
  read_opt(j, "frame_diff", c.frame_diff);
  read_opt(j, "iters_per_step", c.iters_per_step);
  read_opt(j, "iters_gradual", c.iters_gradual);
  read_opt(j, "lr_moment", c.lr_moment);
  read_opt(j, "lr_gradual", c.lr_gradual);
  read_opt(j, "tau_reliability", c.tau_reliability);
  if (j.contains("static_mask")) c.static_mask = static_mask_from_json(j.at("static_mask"));
  read_opt(j, "playback", c.playback);
  read_opt(j, "pose_noise_sigma", c.pose_noise_sigma);
  read_opt(j, "noise_seed", c.noise_seed);
  read_opt(j, "use_comp_loss", c.use_comp_loss);
  read_opt(j, "use_sem_loss", c.use_sem_loss);
  read_opt(j, "use_moment", c.use_moment);
  read_opt(j, "use_gradual", c.use_gradual);
  read_opt(j, "stale_gradual_graph", c.stale_gradual_graph);
  c.validate();
  return c;
}

}  // namespace losadapt
