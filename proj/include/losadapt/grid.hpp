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

#ifndef LOSADAPT_GRID_HPP_
#define LOSADAPT_GRID_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "losadapt/errors.hpp"

namespace losadapt {

inline constexpr std::uint8_t kEmptyClass = 0;
inline constexpr std::uint8_t kIgnoreLabel = 255;

/// Integer voxel coordinates. May be out of bounds; operations that care
/// check against a GridSpec explicitly.
struct VoxelIndex {
  int ix = 0;
  int iy = 0;
  int iz = 0;

  friend bool operator==(const VoxelIndex&, const VoxelIndex&) = default;
};

/// Geometry of a dense voxel grid in the sensor frame plus the semantic class
/// count C (labels 1..C; 0 is empty).
struct GridSpec {
  std::array<int, 3> dims{256, 256, 32};
  Eigen::Vector3d origin{0.0, -25.6, -2.0};
  double voxel_size = 0.2;
  int num_classes = 19;

  /// 256x256x32 at 0.2 m, covering 51.2 m ahead and +-25.6 m sideways.
  static GridSpec semantic_kitti() { return GridSpec{}; }

  int channels() const { return num_classes + 1; }
  std::int64_t num_voxels() const {
    return static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
  }

  bool contains(const VoxelIndex& v) const {
    return v.ix >= 0 && v.iy >= 0 && v.iz >= 0 && v.ix < dims[0] && v.iy < dims[1] &&
           v.iz < dims[2];
  }

  /// Flat offset, ix fastest.
  std::int64_t linear(const VoxelIndex& v) const {
    return v.ix + static_cast<std::int64_t>(dims[0]) * (v.iy + static_cast<std::int64_t>(dims[1]) * v.iz);
  }

  VoxelIndex unravel(std::int64_t idx) const {
    VoxelIndex v;
    v.ix = static_cast<int>(idx % dims[0]);
    idx /= dims[0];
    v.iy = static_cast<int>(idx % dims[1]);
    v.iz = static_cast<int>(idx / dims[1]);
    return v;
  }

  Eigen::Vector3d voxel_center(const VoxelIndex& v) const {
    return origin + voxel_size * Eigen::Vector3d(v.ix + 0.5, v.iy + 0.5, v.iz + 0.5);
  }

  /// Same geometry and class count.
  bool compatible(const GridSpec& o) const {
    return dims == o.dims && origin == o.origin && voxel_size == o.voxel_size &&
           num_classes == o.num_classes;
  }

  void validate() const {
    if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) throw InvalidArgument("grid dims must be >= 1");
    if (!(voxel_size > 0.0)) throw InvalidArgument("voxel_size must be > 0");
    if (num_classes < 1 || num_classes > 254) throw InvalidArgument("num_classes must be in [1, 254]");
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) { return a.compatible(b); }
};

inline void require_compatible(const GridSpec& a, const GridSpec& b, const char* what) {
  if (!a.compatible(b)) throw SpecMismatch(std::string(what) + ": grid specs differ");
}

/// Unclamped floor((p - origin) / voxel_size) per axis.
template <typename Derived>
VoxelIndex voxel_of(const Eigen::MatrixBase<Derived>& p, const GridSpec& spec) {
  const Eigen::Vector3d q = (p.template cast<double>() - spec.origin) / spec.voxel_size;
  return VoxelIndex{static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y())),
                    static_cast<int>(std::floor(q.z()))};
}

/// Voxel containing `p`, or nullopt when it falls outside the grid.
template <typename Derived>
std::optional<VoxelIndex> point_to_voxel(const Eigen::MatrixBase<Derived>& p, const GridSpec& spec) {
  if (!p.allFinite()) throw RejectedPoint("point has a non-finite coordinate");
  const Eigen::Vector3d q = (p.template cast<double>() - spec.origin) / spec.voxel_size;
  // Compare before the int conversion so far-away points cannot overflow.
  for (int a = 0; a < 3; ++a) {
    if (!(q[a] >= 0.0) || !(q[a] < spec.dims[a])) return std::nullopt;
  }
  const VoxelIndex v = voxel_of(p, spec);
  if (!spec.contains(v)) return std::nullopt;
  return v;
}

/// Dense class-index grid; values are 0 (empty), 1..C or 255 (ignore).
struct LabelGrid {
  using Values = Eigen::Array<std::uint8_t, Eigen::Dynamic, 1>;

  GridSpec spec;
  Values values;

  LabelGrid() = default;
  LabelGrid(const GridSpec& s, std::uint8_t fill) : spec(s), values(Values::Constant(s.num_voxels(), fill)) {}

  std::uint8_t& operator()(const VoxelIndex& v) { return values[spec.linear(v)]; }
  std::uint8_t operator()(const VoxelIndex& v) const { return values[spec.linear(v)]; }

  friend bool operator==(const LabelGrid& a, const LabelGrid& b) {
    return a.spec == b.spec && a.values.size() == b.values.size() && (a.values == b.values).all();
  }
};

/// Per-voxel class distributions stored as a channels x voxels matrix
/// (column-major, so each voxel's distribution is contiguous).
template <typename Scalar>
struct ProbGrid {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  GridSpec spec;
  Matrix probs;

  ProbGrid() = default;
  ProbGrid(const GridSpec& s, Matrix p) : spec(s), probs(std::move(p)) {
    if (probs.rows() != s.channels() || probs.cols() != s.num_voxels())
      throw SpecMismatch("ProbGrid: matrix shape does not match spec");
  }

  /// Every voxel gets 1/(C+1).
  static ProbGrid uniform(const GridSpec& s) {
    return ProbGrid(s, Matrix::Constant(s.channels(), s.num_voxels(), Scalar(1) / s.channels()));
  }

  /// Nonnegative columns summing to one within `tol`.
  bool is_valid(Scalar tol = Scalar(1e-5)) const {
    if ((probs.array() < Scalar(0)).any()) return false;
    return ((probs.colwise().sum().array() - Scalar(1)).abs() <= tol).all();
  }
};

using ProbGridd = ProbGrid<double>;

/// Argmax per column with ties toward the lowest index.
template <typename Derived>
Eigen::Array<std::uint8_t, Eigen::Dynamic, 1> argmax_columns(const Eigen::MatrixBase<Derived>& m) {
  Eigen::Array<std::uint8_t, Eigen::Dynamic, 1> out(m.cols());
  for (Eigen::Index v = 0; v < m.cols(); ++v) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < m.rows(); ++c) {
      if (m(c, v) > m(best, v)) best = c;
    }
    out[v] = static_cast<std::uint8_t>(best);
  }
  return out;
}

template <typename Scalar>
LabelGrid argmax_labels(const ProbGrid<Scalar>& p) {
  LabelGrid out;
  out.spec = p.spec;
  out.values = argmax_columns(p.probs);
  return out;
}

/// Two-channel completion view: row 0 is p^0, row 1 is the largest non-empty
/// probability. Rows are left unnormalized.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, Eigen::Dynamic> to_binary_completion(const ProbGrid<Scalar>& p) {
  if (p.probs.rows() < 2) throw SpecMismatch("to_binary_completion needs at least one non-empty class");
  Eigen::Matrix<Scalar, 2, Eigen::Dynamic> out(2, p.probs.cols());
  out.row(0) = p.probs.row(0);
  out.row(1) = p.probs.bottomRows(p.probs.rows() - 1).colwise().maxCoeff();
  return out;
}

}  // namespace losadapt

#endif  // LOSADAPT_GRID_HPP_
