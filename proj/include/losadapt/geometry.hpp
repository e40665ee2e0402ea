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

#ifndef LOSADAPT_GEOMETRY_HPP_
#define LOSADAPT_GEOMETRY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "losadapt/errors.hpp"
#include "losadapt/grid.hpp"

namespace losadapt {

/// Rigid transform x -> rotation * x + translation.
template <typename Scalar>
struct Pose {
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return Pose{}; }

  static Pose from_matrix(const Eigen::Matrix<Scalar, 4, 4>& m) {
    return Pose{m.template topLeftCorner<3, 3>(), m.template topRightCorner<3, 1>()};
  }

  Eigen::Matrix<Scalar, 4, 4> matrix() const {
    Eigen::Matrix<Scalar, 4, 4> m = Eigen::Matrix<Scalar, 4, 4>::Identity();
    m.template topLeftCorner<3, 3>() = rotation;
    m.template topRightCorner<3, 1>() = translation;
    return m;
  }

  Pose inverse() const {
    Pose inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  /// (a * b)(x) = a(b(x)).
  friend Pose operator*(const Pose& a, const Pose& b) {
    return Pose{a.rotation * b.rotation, a.rotation * b.translation + a.translation};
  }

  bool is_valid(Scalar tol = Scalar(1e-6)) const {
    if (!rotation.allFinite() || !translation.allFinite()) return false;
    const Mat3 gram = rotation.transpose() * rotation;
    return (gram - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - Scalar(1)) <= tol;
  }

  template <typename NewScalar>
  Pose<NewScalar> cast() const {
    return Pose<NewScalar>{rotation.template cast<NewScalar>(), translation.template cast<NewScalar>()};
  }
};

using Posed = Pose<double>;

/// Rotation about +z by `yaw` radians.
template <typename Scalar>
Pose<Scalar> yaw_pose(Scalar yaw, const Eigen::Matrix<Scalar, 3, 1>& translation =
                                      Eigen::Matrix<Scalar, 3, 1>::Zero()) {
  Pose<Scalar> p;
  p.rotation = Eigen::AngleAxis<Scalar>(yaw, Eigen::Matrix<Scalar, 3, 1>::UnitZ()).toRotationMatrix();
  p.translation = translation;
  return p;
}

/// Points stored one per column.
template <typename Scalar>
struct PointCloud {
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> points;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> intensity;  // empty or one value per point

  Eigen::Index size() const { return points.cols(); }
  bool has_intensity() const { return intensity.size() == points.cols() && points.cols() > 0; }
  bool is_valid() const {
    return points.allFinite() && (intensity.size() == 0 || intensity.size() == points.cols());
  }
};

using PointCloudd = PointCloud<double>;

/// T_{j->i}: maps frame-j coordinates into frame i given both world poses.
template <typename Scalar>
Pose<Scalar> relative_pose(const Pose<Scalar>& pose_world_j, const Pose<Scalar>& pose_world_i) {
  return pose_world_i.inverse() * pose_world_j;
}

template <typename Scalar>
PointCloud<Scalar> transform_cloud(const PointCloud<Scalar>& x, const Pose<Scalar>& t) {
  PointCloud<Scalar> out;
  out.points = (t.rotation * x.points).colwise() + t.translation;
  out.intensity = x.intensity;
  return out;
}

/// Voxels crossed by the segment from `origin` (continuous, in voxel units so
/// that voxel k spans [k, k+1)) to the center of `target`, in traversal order.
///
/// The segment is clipped to the grid box first. The voxel containing the
/// origin and the target voxel are excluded, as is any voxel the segment only
/// touches at an edge or corner: tied boundary crossings advance all tied axes
/// at once.
inline std::vector<VoxelIndex> los_traverse(const Eigen::Vector3d& origin, const VoxelIndex& target,
                                            const GridSpec& spec) {
  if (!spec.contains(target)) throw OutOfBounds("los_traverse: target voxel outside grid");
  if (!origin.allFinite()) throw RejectedPoint("los_traverse: non-finite origin");

  std::vector<VoxelIndex> out;
  const Eigen::Vector3d end(target.ix + 0.5, target.iy + 0.5, target.iz + 0.5);
  const Eigen::Vector3d dir = end - origin;
  const VoxelIndex origin_voxel{static_cast<int>(std::floor(origin.x())),
                                static_cast<int>(std::floor(origin.y())),
                                static_cast<int>(std::floor(origin.z()))};
  if (origin_voxel == target) return out;

  // Clip [0, 1] against the grid box; `end` is inside, so only entry matters.
  double t_enter = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) continue;
    const double t_lo = (0.0 - origin[a]) / dir[a];
    const double t_hi = (spec.dims[a] - origin[a]) / dir[a];
    t_enter = std::max(t_enter, std::min(t_lo, t_hi));
  }
  if (t_enter >= 1.0) return out;

  constexpr double kEps = 1e-10;
  const Eigen::Vector3d entry = origin + t_enter * dir;
  std::array<int, 3> cur{};
  std::array<int, 3> step{};
  Eigen::Vector3d t_max;
  Eigen::Vector3d t_delta;
  for (int a = 0; a < 3; ++a) {
    cur[a] = std::clamp(static_cast<int>(std::floor(entry[a])), 0, spec.dims[a] - 1);
    if (dir[a] > 0.0) {
      step[a] = 1;
      t_max[a] = (cur[a] + 1 - origin[a]) / dir[a];
      t_delta[a] = 1.0 / dir[a];
    } else if (dir[a] < 0.0) {
      step[a] = -1;
      t_max[a] = (cur[a] - origin[a]) / dir[a];
      t_delta[a] = -1.0 / dir[a];
    } else {
      step[a] = 0;
      t_max[a] = std::numeric_limits<double>::infinity();
      t_delta[a] = std::numeric_limits<double>::infinity();
    }
  }

  const VoxelIndex tgt = target;
  double t_cur = t_enter;
  const int max_steps = spec.dims[0] + spec.dims[1] + spec.dims[2] + 3;
  for (int n = 0; n < max_steps; ++n) {
    const VoxelIndex v{cur[0], cur[1], cur[2]};
    if (v == tgt) break;
    const double t_next = t_max.minCoeff();
    if (!(v == origin_voxel) && t_next - t_cur > kEps) out.push_back(v);
    for (int a = 0; a < 3; ++a) {
      if (t_max[a] <= t_next + kEps) {
        cur[a] += step[a];
        t_max[a] += t_delta[a];
      }
    }
    t_cur = t_next;
    if (!spec.contains(VoxelIndex{cur[0], cur[1], cur[2]}) || t_cur >= 1.0) break;
  }
  return out;
}

/// Adds N(0, sigma^2) to the intrinsic Z-Y-X Euler angles (radians) and to each
/// translation component (meters). Deterministic for a given seed.
template <typename Scalar>
Pose<Scalar> perturb_pose(const Pose<Scalar>& t, double sigma, std::uint64_t rng_seed) {
  if (!(sigma >= 0.0)) throw InvalidArgument("perturb_pose: sigma must be >= 0");
  if (sigma == 0.0) return t;
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> noise(0.0, sigma);

  const Eigen::Matrix3d r = t.rotation.template cast<double>();
  const Eigen::Vector3d ypr = r.eulerAngles(2, 1, 0);
  Eigen::Vector3d angles;
  for (int a = 0; a < 3; ++a) angles[a] = ypr[a] + noise(rng);
  Eigen::Vector3d dt;
  for (int a = 0; a < 3; ++a) dt[a] = noise(rng);

  const Eigen::Quaterniond q = (Eigen::AngleAxisd(angles[0], Eigen::Vector3d::UnitZ()) *
                                Eigen::AngleAxisd(angles[1], Eigen::Vector3d::UnitY()) *
                                Eigen::AngleAxisd(angles[2], Eigen::Vector3d::UnitX()))
                                   .normalized();
  Pose<Scalar> out;
  out.rotation = q.toRotationMatrix().template cast<Scalar>();
  out.translation = t.translation + dt.template cast<Scalar>();
  return out;
}

}  // namespace losadapt

#endif  // LOSADAPT_GEOMETRY_HPP_
