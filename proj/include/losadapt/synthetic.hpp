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

// Deterministic synthetic LiDAR worlds with analytic ground truth.
//
// A world is a ground plane split into class bands along world y, static
// axis-aligned boxes, vertical cylinders and boxes moving at constant
// velocity. The sensor follows a planar trajectory (yaw plus translation) at
// world z = 0 and casts a fixed spinning-LiDAR ray pattern; every return lies
// exactly on the first surface it meets.

#ifndef LOSADAPT_SYNTHETIC_HPP_
#define LOSADAPT_SYNTHETIC_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "losadapt/config.hpp"
#include "losadapt/geometry.hpp"
#include "losadapt/grid.hpp"
#include "losadapt/kitti_io.hpp"

namespace losadapt {

struct SynthBox {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();
  std::uint8_t label = 0;
};

/// Vertical cylinder: disc of `radius` around `center` (x, y) between z_min and z_max.
struct SynthCylinder {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;
  std::uint8_t label = 0;
};

/// A box translating by `velocity` meters per step.
struct MovingBox {
  SynthBox box;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();

  SynthBox at(std::int64_t step) const {
    const Eigen::Vector3d d = velocity * static_cast<double>(step);
    return SynthBox{box.min + d, box.max + d, box.label};
  }
};

/// Ground class for world y in [y_min, y_max).
struct GroundBand {
  double y_min = 0.0;
  double y_max = 0.0;
  std::uint8_t label = 0;
};

/// Planar motion: each step advances `speed` meters along the current
/// heading, then turns by `yaw_rate` radians.
struct SensorTrajectory {
  Eigen::Vector2d start = Eigen::Vector2d::Zero();
  double yaw = 0.0;
  double speed = 0.8;
  double yaw_rate = 0.0;

  Posed at(std::int64_t step) const;
};

/// Spinning LiDAR: `rings` elevations evenly spaced over [elev_min, elev_max]
/// and azimuths evenly spaced over [az_min, az_max). Angles in degrees.
struct LidarPattern {
  int rings = 32;
  double elev_min_deg = -25.0;
  double elev_max_deg = 3.0;
  double az_min_deg = -180.0;
  double az_max_deg = 180.0;
  double max_range = 80.0;
};

struct SyntheticWorld {
  double ground_z = -1.73;
  std::uint8_t ground_label = 9;  // outside every band
  std::vector<GroundBand> bands;
  std::vector<SynthBox> boxes;
  std::vector<SynthCylinder> cylinders;
  std::vector<MovingBox> moving;
  SensorTrajectory trajectory;
  LidarPattern lidar;
  std::uint64_t seed = 0;

  std::uint8_t ground_class(double world_y) const;
  /// Throws InvalidArgument if the sensor is inside a solid at any step < num_steps.
  void check_sensor_clear(std::int64_t num_steps) const;
};

Json to_json(const SyntheticWorld& w);
SyntheticWorld synthetic_world_from_json(const Json& j);

/// Knobs of the procedural street generator.
struct StreetOptions {
  std::uint64_t seed = 0;
  double length = 80.0;         // meters of street generated from x = -10
  double road_half_width = 5.0;
  double sidewalk_width = 3.0;  // on the +y side; terrain on the -y side
  int moving_cars = 3;
  double building_setback_min = 0.5;  // gap between sidewalk and facade
  double building_setback_max = 2.0;
  double building_gap_min = 1.0;      // gaps between neighbouring buildings
  double building_gap_max = 4.0;
  double parked_car_prob = 0.6;
  double terrain_gap_max = 4.0;       // spacing between terrain-side objects
  double speed = 0.8;
  double yaw_rate = 0.0;
  int lidar_rings = 32;
};

/// Street scene: road band between a sidewalk (+y) lined with buildings and
/// poles, and terrain (-y) with vegetation and trunks; parked and moving cars.
SyntheticWorld make_street_world(const StreetOptions& opt);

Json to_json(const StreetOptions& o);
StreetOptions street_options_from_json(const Json& j, StreetOptions o = {});

struct RayHit {
  double range = 0.0;
  std::uint8_t label = 0;
};

/// First surface hit by the world-frame ray origin + t * dir (|dir| = 1), t in (0, max_range].
std::optional<RayHit> cast_ray(const SyntheticWorld& w, std::int64_t step, const Eigen::Vector3d& origin,
                               const Eigen::Vector3d& dir, double max_range);

/// One scan in the sensor frame plus the class of every point.
struct SynthScan {
  PointCloudd cloud;
  std::vector<std::uint8_t> labels;
};

/// Unit ray directions in the sensor frame, ring-major.
Eigen::Matrix3Xd lidar_directions(const LidarPattern& lidar, int rays_per_scan);

SynthScan cast_scan(const SyntheticWorld& w, std::int64_t step, int rays_per_scan, std::uint64_t seed);

/// Exact ground truth in the sensor frame of `step`: a voxel takes the label
/// of any object overlapping it with positive volume (moving boxes over
/// static boxes over cylinders); otherwise the ground class if its z interval
/// contains the ground plane; otherwise empty.
LabelGrid rasterize_gt(const SyntheticWorld& w, const GridSpec& spec, std::int64_t step);

/// 1 for voxels of frame `step` that some scan of frames step-window ..
/// step+window (clamped to [0, num_steps)) hits or passes through, else 0.
/// Mirrors how the dataset marks never-observed voxels invalid.
LabelGrid observed_voxels(const SyntheticWorld& w, const GridSpec& spec, std::int64_t step, std::int64_t num_steps,
                          int window, int rays_per_scan);

/// Frames 0 .. num_steps-1 with GT attached. With visibility_window >= 0 the
/// GT marks voxels outside observed_voxels() as 255.
class SyntheticSequence final : public SequenceSource {
 public:
  SyntheticSequence(SyntheticWorld world, GridSpec spec, std::int64_t num_steps, int rays_per_scan,
                    std::uint64_t seed, int visibility_window = -1);

  std::optional<Frame> next() override;
  std::int64_t num_steps() const { return num_steps_; }
  const SyntheticWorld& world() const { return world_; }

 private:
  SyntheticWorld world_;
  GridSpec spec_;
  std::int64_t num_steps_;
  int rays_per_scan_;
  std::uint64_t seed_;
  int visibility_window_;
  std::int64_t cursor_ = 0;
};

std::unique_ptr<SequenceSource> synth_sequence(const SyntheticWorld& world, const GridSpec& spec,
                                               std::int64_t num_steps, int rays_per_scan, std::uint64_t seed,
                                               int visibility_window = -1);

/// The grid the synthetic experiments use: 64 x 64 x 8 voxels of 0.4 m in
/// front of the sensor, 19 classes.
GridSpec synthetic_grid_spec();

}  // namespace losadapt

#endif  // LOSADAPT_SYNTHETIC_HPP_
