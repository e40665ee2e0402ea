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

#include "losadapt/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace losadapt {
namespace {

constexpr double kRayEps = 1e-9;

double deg(double d) { return d * std::numbers::pi / 180.0; }

// Entry distance of the ray into an axis-aligned box, if any.
std::optional<double> ray_box(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const SynthBox& b) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] <= b.min[a] || o[a] >= b.max[a]) return std::nullopt;
      continue;
    }
    double lo = (b.min[a] - o[a]) / d[a];
    double hi = (b.max[a] - o[a]) / d[a];
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
  }
  if (t0 > t1 || t0 <= kRayEps) return std::nullopt;
  return t0;
}

std::optional<double> ray_cylinder(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const SynthCylinder& c) {
  std::optional<double> best;
  const auto consider = [&](double t) {
    if (t > kRayEps && (!best || t < *best)) best = t;
  };
  const double ox = o.x() - c.center.x();
  const double oy = o.y() - c.center.y();
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 0.0) {
    const double b = 2.0 * (ox * d.x() + oy * d.y());
    const double cc = ox * ox + oy * oy - c.radius * c.radius;
    const double disc = b * b - 4.0 * a * cc;
    if (disc >= 0.0) {
      const double t = (-b - std::sqrt(disc)) / (2.0 * a);
      const double z = o.z() + t * d.z();
      if (z >= c.z_min && z <= c.z_max) consider(t);
    }
  }
  if (d.z() != 0.0) {
    for (double zc : {c.z_min, c.z_max}) {
      const double t = (zc - o.z()) / d.z();
      const double px = ox + t * d.x();
      const double py = oy + t * d.y();
      if (px * px + py * py <= c.radius * c.radius) consider(t);
    }
  }
  return best;
}

bool inside_box(const Eigen::Vector3d& p, const SynthBox& b) {
  return (p.array() > b.min.array()).all() && (p.array() < b.max.array()).all();
}

bool inside_cylinder(const Eigen::Vector3d& p, const SynthCylinder& c) {
  return (p.head<2>() - c.center).squaredNorm() < c.radius * c.radius && p.z() > c.z_min && p.z() < c.z_max;
}

struct Square {
  Eigen::Vector2d center;
  double half;
};

// Positive-area overlap of a rotated rectangle (center, unit axes e1/e2, half
// extents) with an axis-aligned square, by separating axes.
bool rect_overlaps_square(const Eigen::Vector2d& c, const Eigen::Vector2d& e1, const Eigen::Vector2d& e2,
                          double a, double b, const Square& s) {
  const Eigen::Vector2d delta = c - s.center;
  const Eigen::Vector2d axes[4] = {Eigen::Vector2d::UnitX(), Eigen::Vector2d::UnitY(), e1, e2};
  for (const auto& u : axes) {
    const double r_rect = a * std::abs(e1.dot(u)) + b * std::abs(e2.dot(u));
    const double r_sq = s.half * (std::abs(u.x()) + std::abs(u.y()));
    if (std::abs(delta.dot(u)) >= r_rect + r_sq) return false;
  }
  return true;
}

bool disc_overlaps_square(const Eigen::Vector2d& c, double r, const Square& s) {
  const Eigen::Vector2d lo = s.center.array() - s.half;
  const Eigen::Vector2d hi = s.center.array() + s.half;
  const Eigen::Vector2d nearest = c.cwiseMax(lo).cwiseMin(hi);
  return (nearest - c).squaredNorm() < r * r;
}

// Voxel index range [lo, hi] along one axis touched by the interval [a, b].
std::pair<int, int> index_range(double a, double b, double origin, double size, int n) {
  const int lo = std::max(0, static_cast<int>(std::floor((a - origin) / size)));
  const int hi = std::min(n - 1, static_cast<int>(std::floor((b - origin) / size)));
  return {lo, hi};
}

struct Footprint {
  Eigen::Vector2d lo, hi;  // sensor-frame AABB
};

class Rasterizer {
 public:
  Rasterizer(const GridSpec& spec, const Posed& pose) : spec_(spec), inv_(pose.inverse()), out_(spec, kEmptyClass) {
    e1_ = inv_.rotation.block<2, 1>(0, 0);
    e2_ = inv_.rotation.block<2, 1>(0, 1);
  }

  LabelGrid& grid() { return out_; }

  void box(const SynthBox& b) {
    const Eigen::Vector3d cw = 0.5 * (b.min + b.max);
    const Eigen::Vector3d half = 0.5 * (b.max - b.min);
    const Eigen::Vector3d cs = inv_.apply(cw);
    const double zlo = b.min.z() + inv_.translation.z();
    const double zhi = b.max.z() + inv_.translation.z();
    const double ex = half.x() * std::abs(e1_.x()) + half.y() * std::abs(e2_.x());
    const double ey = half.x() * std::abs(e1_.y()) + half.y() * std::abs(e2_.y());
    fill({cs.head<2>() - Eigen::Vector2d(ex, ey), cs.head<2>() + Eigen::Vector2d(ex, ey)}, zlo, zhi, b.label,
         [&](const Square& s) { return rect_overlaps_square(cs.head<2>(), e1_, e2_, half.x(), half.y(), s); });
  }

  void cylinder(const SynthCylinder& c) {
    const Eigen::Vector3d cs = inv_.apply(Eigen::Vector3d(c.center.x(), c.center.y(), 0.0));
    const double zlo = c.z_min + inv_.translation.z();
    const double zhi = c.z_max + inv_.translation.z();
    const Eigen::Vector2d r(c.radius, c.radius);
    fill({cs.head<2>() - r, cs.head<2>() + r}, zlo, zhi, c.label,
         [&](const Square& s) { return disc_overlaps_square(cs.head<2>(), c.radius, s); });
  }

  void ground(const SyntheticWorld& w) {
    const Posed pose = inv_.inverse();
    const double g = w.ground_z - pose.translation.z();
    const double q = (g - spec_.origin.z()) / spec_.voxel_size;
    const int iz = static_cast<int>(std::floor(q));
    if (iz < 0 || iz >= spec_.dims[2]) return;
    for (int iy = 0; iy < spec_.dims[1]; ++iy) {
      for (int ix = 0; ix < spec_.dims[0]; ++ix) {
        const Eigen::Vector3d c = spec_.voxel_center({ix, iy, iz});
        out_({ix, iy, iz}) = w.ground_class(pose.apply(c).y());
      }
    }
  }

 private:
  template <typename Overlap>
  void fill(const Footprint& fp, double zlo, double zhi, std::uint8_t label, Overlap overlaps) {
    const double vs = spec_.voxel_size;
    const auto [x0, x1] = index_range(fp.lo.x(), fp.hi.x(), spec_.origin.x(), vs, spec_.dims[0]);
    const auto [y0, y1] = index_range(fp.lo.y(), fp.hi.y(), spec_.origin.y(), vs, spec_.dims[1]);
    const auto [z0, z1] = index_range(zlo, zhi, spec_.origin.z(), vs, spec_.dims[2]);
    for (int iz = z0; iz <= z1; ++iz) {
      const double vlo = spec_.origin.z() + iz * vs;
      if (!(std::max(zlo, vlo) < std::min(zhi, vlo + vs))) continue;
      for (int iy = y0; iy <= y1; ++iy) {
        for (int ix = x0; ix <= x1; ++ix) {
          const Eigen::Vector3d c = spec_.voxel_center({ix, iy, iz});
          if (overlaps(Square{c.head<2>(), 0.5 * vs})) out_({ix, iy, iz}) = label;
        }
      }
    }
  }

  const GridSpec& spec_;
  Posed inv_;
  Eigen::Vector2d e1_, e2_;  // world x / y axes seen from the sensor
  LabelGrid out_;
};

Json vec_json(const Eigen::Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }
Eigen::Vector3d vec3(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw InvalidArgument("expected a 3-vector");
  return {v[0], v[1], v[2]};
}
Eigen::Vector2d vec2(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 2) throw InvalidArgument("expected a 2-vector");
  return {v[0], v[1]};
}

Json box_json(const SynthBox& b) { return Json{{"min", vec_json(b.min)}, {"max", vec_json(b.max)}, {"label", b.label}}; }
SynthBox box_from(const Json& j) {
  SynthBox b{vec3(j.at("min")), vec3(j.at("max")), j.at("label").get<std::uint8_t>()};
  if ((b.max.array() <= b.min.array()).any()) throw InvalidArgument("box max must exceed min on every axis");
  return b;
}

}  // namespace

Posed SensorTrajectory::at(std::int64_t step) const {
  if (step < 0) throw InvalidArgument("trajectory step must be >= 0");
  Eigen::Vector2d p = start;
  double heading = yaw;
  for (std::int64_t k = 0; k < step; ++k) {
    p += speed * Eigen::Vector2d(std::cos(heading), std::sin(heading));
    heading += yaw_rate;
  }
  return yaw_pose(heading, Eigen::Vector3d(p.x(), p.y(), 0.0));
}

std::uint8_t SyntheticWorld::ground_class(double world_y) const {
  for (const GroundBand& b : bands) {
    if (world_y >= b.y_min && world_y < b.y_max) return b.label;
  }
  return ground_label;
}

void SyntheticWorld::check_sensor_clear(std::int64_t num_steps) const {
  for (std::int64_t k = 0; k < num_steps; ++k) {
    const Eigen::Vector3d p = trajectory.at(k).translation;
    bool inside = p.z() <= ground_z;
    for (const auto& b : boxes) inside = inside || inside_box(p, b);
    for (const auto& c : cylinders) inside = inside || inside_cylinder(p, c);
    for (const auto& m : moving) inside = inside || inside_box(p, m.at(k));
    if (inside) throw InvalidArgument("degenerate synthetic world: sensor inside a solid at step " + std::to_string(k));
  }
}

Json to_json(const SyntheticWorld& w) {
  Json bands = Json::array(), boxes = Json::array(), cyl = Json::array(), moving = Json::array();
  for (const auto& b : w.bands) bands.push_back({{"y_min", b.y_min}, {"y_max", b.y_max}, {"label", b.label}});
  for (const auto& b : w.boxes) boxes.push_back(box_json(b));
  for (const auto& c : w.cylinders) {
    cyl.push_back({{"center", {c.center.x(), c.center.y()}},
                   {"radius", c.radius},
                   {"z_min", c.z_min},
                   {"z_max", c.z_max},
                   {"label", c.label}});
  }
  for (const auto& m : w.moving) moving.push_back({{"box", box_json(m.box)}, {"velocity", vec_json(m.velocity)}});
  const auto& t = w.trajectory;
  const auto& l = w.lidar;
  return Json{{"ground_z", w.ground_z},
              {"ground_label", w.ground_label},
              {"bands", bands},
              {"boxes", boxes},
              {"cylinders", cyl},
              {"moving", moving},
              {"trajectory",
               {{"start", {t.start.x(), t.start.y()}}, {"yaw", t.yaw}, {"speed", t.speed}, {"yaw_rate", t.yaw_rate}}},
              {"lidar",
               {{"rings", l.rings},
                {"elev_min_deg", l.elev_min_deg},
                {"elev_max_deg", l.elev_max_deg},
                {"az_min_deg", l.az_min_deg},
                {"az_max_deg", l.az_max_deg},
                {"max_range", l.max_range}}},
              {"seed", w.seed}};
}

SyntheticWorld synthetic_world_from_json(const Json& j) {
  SyntheticWorld w;
  w.ground_z = j.value("ground_z", w.ground_z);
  w.ground_label = j.value("ground_label", w.ground_label);
  for (const auto& b : j.value("bands", Json::array()))
    w.bands.push_back({b.at("y_min").get<double>(), b.at("y_max").get<double>(), b.at("label").get<std::uint8_t>()});
  for (const auto& b : j.value("boxes", Json::array())) w.boxes.push_back(box_from(b));
  for (const auto& c : j.value("cylinders", Json::array())) {
    SynthCylinder cy{vec2(c.at("center")), c.at("radius").get<double>(), c.at("z_min").get<double>(),
                     c.at("z_max").get<double>(), c.at("label").get<std::uint8_t>()};
    if (!(cy.radius > 0.0) || !(cy.z_max > cy.z_min)) throw InvalidArgument("degenerate cylinder");
    w.cylinders.push_back(cy);
  }
  for (const auto& m : j.value("moving", Json::array()))
    w.moving.push_back({box_from(m.at("box")), vec3(m.at("velocity"))});
  if (j.contains("trajectory")) {
    const auto& t = j.at("trajectory");
    if (t.contains("start")) w.trajectory.start = vec2(t.at("start"));
    w.trajectory.yaw = t.value("yaw", w.trajectory.yaw);
    w.trajectory.speed = t.value("speed", w.trajectory.speed);
    w.trajectory.yaw_rate = t.value("yaw_rate", w.trajectory.yaw_rate);
  }
  if (j.contains("lidar")) {
    const auto& l = j.at("lidar");
    w.lidar.rings = l.value("rings", w.lidar.rings);
    w.lidar.elev_min_deg = l.value("elev_min_deg", w.lidar.elev_min_deg);
    w.lidar.elev_max_deg = l.value("elev_max_deg", w.lidar.elev_max_deg);
    w.lidar.az_min_deg = l.value("az_min_deg", w.lidar.az_min_deg);
    w.lidar.az_max_deg = l.value("az_max_deg", w.lidar.az_max_deg);
    w.lidar.max_range = l.value("max_range", w.lidar.max_range);
    if (w.lidar.rings < 1) throw InvalidArgument("lidar.rings must be >= 1");
  }
  w.seed = j.value("seed", w.seed);
  return w;
}

Json to_json(const StreetOptions& o) {
  return Json{{"seed", o.seed},
              {"length", o.length},
              {"road_half_width", o.road_half_width},
              {"sidewalk_width", o.sidewalk_width},
              {"moving_cars", o.moving_cars},
              {"building_setback_min", o.building_setback_min},
              {"building_setback_max", o.building_setback_max},
              {"building_gap_min", o.building_gap_min},
              {"building_gap_max", o.building_gap_max},
              {"parked_car_prob", o.parked_car_prob},
              {"terrain_gap_max", o.terrain_gap_max},
              {"speed", o.speed},
              {"yaw_rate", o.yaw_rate},
              {"lidar_rings", o.lidar_rings}};
}

StreetOptions street_options_from_json(const Json& j, StreetOptions o) {
  o.seed = j.value("seed", o.seed);
  o.length = j.value("length", o.length);
  o.road_half_width = j.value("road_half_width", o.road_half_width);
  o.sidewalk_width = j.value("sidewalk_width", o.sidewalk_width);
  o.moving_cars = j.value("moving_cars", o.moving_cars);
  o.building_setback_min = j.value("building_setback_min", o.building_setback_min);
  o.building_setback_max = j.value("building_setback_max", o.building_setback_max);
  o.building_gap_min = j.value("building_gap_min", o.building_gap_min);
  o.building_gap_max = j.value("building_gap_max", o.building_gap_max);
  o.parked_car_prob = j.value("parked_car_prob", o.parked_car_prob);
  o.terrain_gap_max = j.value("terrain_gap_max", o.terrain_gap_max);
  o.speed = j.value("speed", o.speed);
  o.yaw_rate = j.value("yaw_rate", o.yaw_rate);
  o.lidar_rings = j.value("lidar_rings", o.lidar_rings);
  if (!(o.length > 0.0) || !(o.road_half_width > 2.9) || !(o.sidewalk_width >= 0.0) || o.moving_cars < 0 ||
      !(o.building_setback_max >= o.building_setback_min) || !(o.building_gap_max >= o.building_gap_min) ||
      !(o.building_gap_min >= 0.0) || !(o.terrain_gap_max >= 1.0) || o.lidar_rings < 1)
    throw InvalidArgument("invalid street options");
  return o;
}

SyntheticWorld make_street_world(const StreetOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  const auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  const auto chance = [&](double p) { return uni(0.0, 1.0) < p; };

  SyntheticWorld w;
  w.seed = opt.seed;
  const double g = w.ground_z;
  const double rw = opt.road_half_width;
  const double walk = rw + opt.sidewalk_width;
  const double x_begin = -10.0;
  const double x_end = x_begin + opt.length;
  w.bands = {{-1e9, -rw, 17}, {-rw, rw, 9}, {rw, 1e9, 11}};
  w.ground_label = 9;
  w.trajectory.speed = opt.speed;
  w.trajectory.yaw_rate = opt.yaw_rate;
  w.lidar.rings = opt.lidar_rings;

  // Building row behind the sidewalk, with gaps.
  for (double x = x_begin + uni(0.0, 3.0); x < x_end;) {
    const double len = uni(6.0, 14.0);
    const double y0 = walk + uni(opt.building_setback_min, opt.building_setback_max);
    w.boxes.push_back({{x, y0, g}, {x + len, y0 + uni(4.0, 8.0), g + uni(4.0, 10.0)}, 13});
    x += len + uni(opt.building_gap_min, opt.building_gap_max);
  }
  // Poles along the curb.
  for (double x = x_begin + uni(0.0, 6.0); x < x_end; x += uni(8.0, 15.0))
    w.cylinders.push_back({{x, rw + 0.5}, uni(0.08, 0.15), g, g + uni(3.0, 5.0), 18});
  // Terrain side: bushes, trees (trunk plus crown) and occasional fences.
  for (double x = x_begin + uni(0.0, 3.0); x < x_end;) {
    const double y_near = -rw - uni(1.0, 4.0);
    if (chance(0.55)) {
      const double sx = uni(1.0, 3.0), sy = uni(1.0, 2.5);
      w.boxes.push_back({{x, y_near - sy, g}, {x + sx, y_near, g + uni(0.5, 2.0)}, 15});
      x += sx + uni(1.0, opt.terrain_gap_max);
    } else if (chance(0.75)) {
      const double r = uni(0.2, 0.35);
      const Eigen::Vector2d c(x + r, y_near - r);
      w.cylinders.push_back({c, r, g, g + uni(2.5, 3.5), 16});
      const double crown = uni(1.2, 2.0);
      w.boxes.push_back({{c.x() - crown, c.y() - crown, g + uni(1.6, 2.2)},
                         {c.x() + crown, c.y() + crown, g + uni(4.0, 6.0)},
                         15});
      x += 2.0 * crown + uni(1.0, opt.terrain_gap_max);
    } else {
      const double len = uni(3.0, 8.0);
      w.boxes.push_back({{x, y_near - 0.15, g}, {x + len, y_near, g + uni(0.8, 1.4)}, 14});
      x += len + uni(1.0, opt.terrain_gap_max);
    }
  }
  // Parked cars on both road edges.
  for (int side : {-1, 1}) {
    for (double x = x_begin + uni(0.0, 5.0); x < x_end; x += uni(5.0, 12.0)) {
      if (!chance(opt.parked_car_prob)) continue;
      const double yc = side * (rw - 1.0);
      w.boxes.push_back({{x, yc - 0.9, g}, {x + 4.2, yc + 0.9, g + uni(1.3, 1.7)}, 1});
    }
  }
  // Moving cars in the two lanes, clear of the sensor's own lane at y = 0.
  for (int k = 0; k < opt.moving_cars; ++k) {
    const int side = (k % 2 == 0) ? 1 : -1;
    const double yc = side * 2.0;
    const double x0 = uni(x_begin, x_end - 20.0);
    const double vx = side > 0 ? uni(0.3, 1.4) : -uni(0.5, 1.2);
    w.moving.push_back({{{x0, yc - 0.85, g}, {x0 + 4.4, yc + 0.85, g + uni(1.3, 1.6)}, 1}, {vx, 0.0, 0.0}});
  }
  return w;
}

std::optional<RayHit> cast_ray(const SyntheticWorld& w, std::int64_t step, const Eigen::Vector3d& origin,
                               const Eigen::Vector3d& dir, double max_range) {
  std::optional<RayHit> best;
  const auto consider = [&](std::optional<double> t, std::uint8_t label) {
    if (t && *t <= max_range && (!best || *t < best->range)) best = RayHit{*t, label};
  };
  if (dir.z() < 0.0 && origin.z() > w.ground_z) {
    const double t = (w.ground_z - origin.z()) / dir.z();
    consider(t, w.ground_class(origin.y() + t * dir.y()));
  }
  for (const auto& b : w.boxes) consider(ray_box(origin, dir, b), b.label);
  for (const auto& c : w.cylinders) consider(ray_cylinder(origin, dir, c), c.label);
  for (const auto& m : w.moving) {
    const SynthBox b = m.at(step);
    consider(ray_box(origin, dir, b), b.label);
  }
  return best;
}

Eigen::Matrix3Xd lidar_directions(const LidarPattern& lidar, int rays_per_scan) {
  if (rays_per_scan < 0) throw InvalidArgument("rays_per_scan must be >= 0");
  if (rays_per_scan == 0) return Eigen::Matrix3Xd(3, 0);
  if (rays_per_scan < lidar.rings) throw InvalidArgument("rays_per_scan must be 0 or at least the ring count");
  const int azimuths = rays_per_scan / lidar.rings;
  Eigen::Matrix3Xd dirs(3, static_cast<Eigen::Index>(lidar.rings) * azimuths);
  Eigen::Index n = 0;
  for (int r = 0; r < lidar.rings; ++r) {
    const double e = lidar.rings == 1
                         ? deg(lidar.elev_min_deg)
                         : deg(lidar.elev_min_deg + r * (lidar.elev_max_deg - lidar.elev_min_deg) / (lidar.rings - 1));
    for (int a = 0; a < azimuths; ++a) {
      const double az = deg(lidar.az_min_deg + a * (lidar.az_max_deg - lidar.az_min_deg) / azimuths);
      dirs.col(n++) = Eigen::Vector3d(std::cos(e) * std::cos(az), std::cos(e) * std::sin(az), std::sin(e));
    }
  }
  return dirs;
}

SynthScan cast_scan(const SyntheticWorld& w, std::int64_t step, int rays_per_scan, std::uint64_t seed) {
  const Eigen::Matrix3Xd dirs = lidar_directions(w.lidar, rays_per_scan);
  const Posed pose = w.trajectory.at(step);
  std::vector<Eigen::Vector3d> pts;
  SynthScan out;
  pts.reserve(dirs.cols());
  out.labels.reserve(dirs.cols());
  for (Eigen::Index n = 0; n < dirs.cols(); ++n) {
    const Eigen::Vector3d d = dirs.col(n);
    const auto hit = cast_ray(w, step, pose.translation, pose.rotation * d, w.lidar.max_range);
    if (!hit) continue;
    pts.push_back(hit->range * d);
    out.labels.push_back(hit->label);
  }
  std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(step + 1)));
  std::uniform_real_distribution<double> refl(0.0, 1.0);
  out.cloud.points.resize(3, static_cast<Eigen::Index>(pts.size()));
  out.cloud.intensity.resize(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t n = 0; n < pts.size(); ++n) {
    out.cloud.points.col(static_cast<Eigen::Index>(n)) = pts[n];
    out.cloud.intensity[static_cast<Eigen::Index>(n)] = refl(rng);
  }
  return out;
}

LabelGrid rasterize_gt(const SyntheticWorld& w, const GridSpec& spec, std::int64_t step) {
  Rasterizer r(spec, w.trajectory.at(step));
  r.ground(w);
  for (const auto& c : w.cylinders) r.cylinder(c);
  for (const auto& b : w.boxes) r.box(b);
  for (const auto& m : w.moving) r.box(m.at(step));
  return std::move(r.grid());
}

LabelGrid observed_voxels(const SyntheticWorld& w, const GridSpec& spec, std::int64_t step, std::int64_t num_steps,
                          int window, int rays_per_scan) {
  LabelGrid seen(spec, 0);
  const Posed pose = w.trajectory.at(step);
  const std::int64_t first = std::max<std::int64_t>(0, step - window);
  const std::int64_t last = std::min<std::int64_t>(num_steps - 1, step + window);
  std::vector<std::int64_t> targets;
  for (std::int64_t f = first; f <= last; ++f) {
    const Posed t = relative_pose(w.trajectory.at(f), pose);
    const PointCloudd x = transform_cloud(cast_scan(w, f, rays_per_scan, 0).cloud, t);
    targets.clear();
    for (Eigen::Index n = 0; n < x.size(); ++n) {
      if (const auto v = point_to_voxel(x.points.col(n), spec)) targets.push_back(spec.linear(*v));
    }
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    const Eigen::Vector3d origin = (t.translation - spec.origin) / spec.voxel_size;
    for (std::int64_t idx : targets) {
      seen.values[idx] = 1;
      for (const VoxelIndex& v : los_traverse(origin, spec.unravel(idx), spec)) seen(v) = 1;
    }
  }
  return seen;
}

SyntheticSequence::SyntheticSequence(SyntheticWorld world, GridSpec spec, std::int64_t num_steps, int rays_per_scan,
                                     std::uint64_t seed, int visibility_window)
    : world_(std::move(world)), spec_(std::move(spec)), num_steps_(num_steps), rays_per_scan_(rays_per_scan),
      seed_(seed), visibility_window_(visibility_window) {
  if (num_steps < 0) throw InvalidArgument("num_steps must be >= 0");
  spec_.validate();
  lidar_directions(world_.lidar, rays_per_scan_);
  world_.check_sensor_clear(num_steps_);
}

std::optional<Frame> SyntheticSequence::next() {
  if (cursor_ >= num_steps_) return std::nullopt;
  const std::int64_t k = cursor_++;
  Frame f;
  f.index = k;
  f.cloud = cast_scan(world_, k, rays_per_scan_, seed_).cloud;
  f.pose = world_.trajectory.at(k);
  f.gt = rasterize_gt(world_, spec_, k);
  if (visibility_window_ >= 0) {
    const LabelGrid seen = observed_voxels(world_, spec_, k, num_steps_, visibility_window_, rays_per_scan_);
    f.gt->values = (seen.values == 0).select(kIgnoreLabel, f.gt->values);
  }
  return f;
}

std::unique_ptr<SequenceSource> synth_sequence(const SyntheticWorld& world, const GridSpec& spec,
                                               std::int64_t num_steps, int rays_per_scan, std::uint64_t seed,
                                               int visibility_window) {
  return std::make_unique<SyntheticSequence>(world, spec, num_steps, rays_per_scan, seed, visibility_window);
}

GridSpec synthetic_grid_spec() {
  GridSpec s;
  s.dims = {64, 64, 8};
  s.origin = Eigen::Vector3d(0.0, -12.8, -2.0);
  s.voxel_size = 0.4;
  s.num_classes = 19;
  return s;
}

}  // namespace losadapt
