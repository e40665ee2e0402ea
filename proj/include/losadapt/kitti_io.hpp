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

// SemanticKITTI file formats.
//
//   velodyne/NNNNNN.bin    float32 (x, y, z, reflectance) quadruples
//   voxels/NNNNNN.bin      occupancy bits, MSB first
//   voxels/NNNNNN.label    uint16 raw class ids
//   voxels/NNNNNN.invalid  invalid bits, MSB first
//   poses.txt              12 floats per line, row-major 3x4 camera pose
//   calib.txt              "Tr:" row gives the velodyne -> camera extrinsic
//
// Voxel files enumerate the grid with z fastest, then y, then x. All binary
// data is little-endian.

#ifndef LOSADAPT_KITTI_IO_HPP_
#define LOSADAPT_KITTI_IO_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "losadapt/geometry.hpp"
#include "losadapt/grid.hpp"

namespace losadapt {

/// Raw dataset ids (uint16) to training ids; unmapped ids go to 255.
class LearningMap {
 public:
  LearningMap();

  /// The 19-class SemanticKITTI mapping.
  static LearningMap semantic_kitti();
  /// JSON object {"learning_map": {"<raw>": <train>, ...}}.
  static LearningMap from_json_file(const std::string& path);

  void set(std::uint16_t raw, std::uint8_t train) { forward_[raw] = train; }
  std::uint8_t operator()(std::uint16_t raw) const { return forward_[raw]; }
  /// Smallest raw id mapping to `train`, if any.
  std::optional<std::uint16_t> inverse(std::uint8_t train) const;

 private:
  std::vector<std::uint8_t> forward_;
};

PointCloudd read_kitti_scan(const std::string& path);
void write_kitti_scan(const std::string& path, const PointCloudd& cloud);

/// Parses the "Tr" row of a calib.txt into a 4x4 velodyne -> camera transform.
Eigen::Matrix4d read_kitti_calib_tr(const std::string& calib_path);

/// LiDAR world poses Tr^-1 * P * Tr for every line of poses.txt.
std::vector<Posed> read_kitti_poses(const std::string& poses_path, const std::string& calib_path);

/// Writes camera poses P = Tr * pose * Tr^-1 so that read_kitti_poses recovers `lidar_poses`.
void write_kitti_poses(const std::string& poses_path, const std::vector<Posed>& lidar_poses,
                       const Eigen::Matrix4d& tr = Eigen::Matrix4d::Identity());
void write_kitti_calib(const std::string& calib_path, const Eigen::Matrix4d& tr = Eigen::Matrix4d::Identity());

/// Ground-truth grid from the three voxel files. Voxels flagged invalid are 255.
LabelGrid read_kitti_voxels(const std::string& bin_path, const std::string& label_path,
                            const std::string& invalid_path, const LearningMap& map = LearningMap::semantic_kitti(),
                            const GridSpec& spec = GridSpec::semantic_kitti());

/// Inverse of read_kitti_voxels: 255 becomes an invalid bit (label 0), classes
/// are written as their smallest raw id, occupancy is label not in {0, 255}.
void write_kitti_voxels(const LabelGrid& grid, const std::string& bin_path, const std::string& label_path,
                        const std::string& invalid_path, const LearningMap& map = LearningMap::semantic_kitti());

/// Offset of voxel `v` in the files' z-fastest order.
std::int64_t kitti_file_offset(const VoxelIndex& v, const GridSpec& spec);

struct Frame {
  std::int64_t index = 0;
  PointCloudd cloud;
  Posed pose;  // LiDAR pose in the world frame
  std::optional<LabelGrid> gt;
};

/// Single-consumer stream of frames in increasing index order.
class SequenceSource {
 public:
  virtual ~SequenceSource() = default;
  virtual std::optional<Frame> next() = 0;
};

/// Reads sequences/NN in the SemanticKITTI layout. Ground truth is attached
/// for frames whose voxels/NNNNNN.label and .invalid exist.
class KittiSequence final : public SequenceSource {
 public:
  KittiSequence(std::filesystem::path dir, GridSpec spec, LearningMap map = LearningMap::semantic_kitti(),
                std::int64_t max_frames = -1);

  std::optional<Frame> next() override;
  std::size_t size() const { return scans_.size(); }

 private:
  std::filesystem::path dir_;
  GridSpec spec_;
  LearningMap map_;
  std::vector<std::filesystem::path> scans_;
  std::vector<Posed> poses_;
  std::size_t cursor_ = 0;
};

/// Writes frames in the SemanticKITTI layout under `dir` (created if needed).
void write_kitti_sequence(const std::filesystem::path& dir, const std::vector<Frame>& frames,
                          const LearningMap& map = LearningMap::semantic_kitti());

}  // namespace losadapt

#endif  // LOSADAPT_KITTI_IO_HPP_
