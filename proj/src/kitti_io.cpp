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

#include "losadapt/kitti_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "binary_io.hpp"
#include "json.hpp"

namespace losadapt {
namespace fs = std::filesystem;
namespace {

std::vector<char> read_all(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return std::vector<char>(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

void write_all(const std::string& path, const void* data, std::size_t n) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!os) throw Error("write failed: " + path);
}

std::vector<std::uint8_t> unpack_bits(const std::vector<char>& bytes) {
  std::vector<std::uint8_t> bits(bytes.size() * 8);
  for (std::size_t b = 0; b < bytes.size(); ++b) {
    const auto byte = static_cast<std::uint8_t>(bytes[b]);
    for (int k = 0; k < 8; ++k) bits[b * 8 + k] = (byte >> (7 - k)) & 1u;
  }
  return bits;
}

std::vector<char> pack_bits(const std::vector<std::uint8_t>& bits) {
  std::vector<char> bytes(bits.size() / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) bytes[i / 8] = static_cast<char>(static_cast<std::uint8_t>(bytes[i / 8]) | (1u << (7 - i % 8)));
  }
  return bytes;
}

// Parses exactly `n` whitespace-separated doubles; `line_no` feeds the error offset.
std::vector<double> parse_doubles(const std::string& text, std::size_t n, const std::string& what,
                                  std::int64_t line_no) {
  std::istringstream ss(text);
  std::vector<double> out;
  double d;
  while (ss >> d) out.push_back(d);
  if (!ss.eof() || out.size() != n)
    throw FormatError(what + ": expected " + std::to_string(n) + " numbers on line " + std::to_string(line_no),
                      line_no);
  return out;
}

Eigen::Matrix4d matrix_from_row_major_3x4(const std::vector<double>& v) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) m(r, c) = v[r * 4 + c];
  }
  return m;
}

void write_row_major_3x4(std::ostream& os, const Eigen::Matrix4d& m) {
  os << std::setprecision(17);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) os << (r == 0 && c == 0 ? "" : " ") << m(r, c);
  }
}

std::string frame_name(std::int64_t index) {
  std::ostringstream ss;
  ss << std::setw(6) << std::setfill('0') << index;
  return ss.str();
}

}  // namespace

LearningMap::LearningMap() : forward_(65536, kIgnoreLabel) {}

LearningMap LearningMap::semantic_kitti() {
  static constexpr std::pair<std::uint16_t, std::uint8_t> kTable[] = {
      {0, 0},    {1, 0},    {10, 1},   {11, 2},   {13, 5},   {15, 3},   {16, 5},   {18, 4},   {20, 5},
      {30, 6},   {31, 7},   {32, 8},   {40, 9},   {44, 10},  {48, 11},  {49, 12},  {50, 13},  {51, 14},
      {52, 0},   {60, 9},   {70, 15},  {71, 16},  {72, 17},  {80, 18},  {81, 19},  {99, 0},   {252, 1},
      {253, 7},  {254, 6},  {255, 8},  {256, 5},  {257, 5},  {258, 4},  {259, 5}};
  LearningMap m;
  for (const auto& [raw, train] : kTable) m.set(raw, train);
  return m;
}

LearningMap LearningMap::from_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what(), static_cast<std::int64_t>(e.byte));
  }
  LearningMap m;
  for (const auto& [key, value] : j.at("learning_map").items()) {
    const int raw = std::stoi(key);
    const int train = value.get<int>();
    if (raw < 0 || raw > 65535 || train < 0 || train > 255) throw InvalidArgument(path + ": id out of range");
    m.set(static_cast<std::uint16_t>(raw), static_cast<std::uint8_t>(train));
  }
  return m;
}

std::optional<std::uint16_t> LearningMap::inverse(std::uint8_t train) const {
  for (std::size_t raw = 0; raw < forward_.size(); ++raw) {
    if (forward_[raw] == train) return static_cast<std::uint16_t>(raw);
  }
  return std::nullopt;
}

PointCloudd read_kitti_scan(const std::string& path) {
  const std::vector<char> bytes = read_all(path);
  if (bytes.size() % 16 != 0)
    throw FormatError(path + ": size " + std::to_string(bytes.size()) + " is not a multiple of 16",
                      static_cast<std::int64_t>(bytes.size() - bytes.size() % 16));
  const Eigen::Index n = static_cast<Eigen::Index>(bytes.size() / 16);
  Eigen::Matrix<float, 4, Eigen::Dynamic> raw(4, n);
  if (n > 0) std::memcpy(raw.data(), bytes.data(), bytes.size());
  PointCloudd cloud;
  cloud.points = raw.topRows<3>().cast<double>();
  cloud.intensity = raw.row(3).transpose().cast<double>();
  if (!cloud.points.allFinite()) throw FormatError(path + ": non-finite coordinate", 0);
  return cloud;
}

void write_kitti_scan(const std::string& path, const PointCloudd& cloud) {
  Eigen::Matrix<float, 4, Eigen::Dynamic> raw(4, cloud.size());
  raw.topRows<3>() = cloud.points.cast<float>();
  if (cloud.has_intensity()) {
    raw.row(3) = cloud.intensity.transpose().cast<float>();
  } else {
    raw.row(3).setZero();
  }
  write_all(path, raw.data(), static_cast<std::size_t>(raw.size()) * sizeof(float));
}

Eigen::Matrix4d read_kitti_calib_tr(const std::string& calib_path) {
  std::ifstream is(calib_path);
  if (!is) throw Error("cannot open " + calib_path);
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    if (line.substr(0, colon) != "Tr") continue;
    return matrix_from_row_major_3x4(parse_doubles(line.substr(colon + 1), 12, calib_path, line_no));
  }
  throw FormatError(calib_path + ": no Tr row", line_no);
}

std::vector<Posed> read_kitti_poses(const std::string& poses_path, const std::string& calib_path) {
  const Eigen::Matrix4d tr = read_kitti_calib_tr(calib_path);
  const Eigen::Matrix4d tr_inv = tr.inverse();
  std::ifstream is(poses_path);
  if (!is) throw Error("cannot open " + poses_path);
  std::vector<Posed> out;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const Eigen::Matrix4d p = matrix_from_row_major_3x4(parse_doubles(line, 12, poses_path, line_no));
    out.push_back(Posed::from_matrix(tr_inv * p * tr));
  }
  return out;
}

void write_kitti_poses(const std::string& poses_path, const std::vector<Posed>& lidar_poses,
                       const Eigen::Matrix4d& tr) {
  std::ofstream os(poses_path);
  if (!os) throw Error("cannot open " + poses_path + " for writing");
  const Eigen::Matrix4d tr_inv = tr.inverse();
  for (const Posed& pose : lidar_poses) {
    write_row_major_3x4(os, tr * pose.matrix() * tr_inv);
    os << '\n';
  }
}

void write_kitti_calib(const std::string& calib_path, const Eigen::Matrix4d& tr) {
  std::ofstream os(calib_path);
  if (!os) throw Error("cannot open " + calib_path + " for writing");
  os << "Tr: ";
  write_row_major_3x4(os, tr);
  os << '\n';
}

std::int64_t kitti_file_offset(const VoxelIndex& v, const GridSpec& spec) {
  return (static_cast<std::int64_t>(v.ix) * spec.dims[1] + v.iy) * spec.dims[2] + v.iz;
}

LabelGrid read_kitti_voxels(const std::string& bin_path, const std::string& label_path,
                            const std::string& invalid_path, const LearningMap& map, const GridSpec& spec) {
  const std::int64_t n = spec.num_voxels();
  if (n % 8 != 0) throw InvalidArgument("voxel count must be a multiple of 8");
  const auto expect = [](const std::vector<char>& bytes, std::int64_t size, const std::string& path) {
    if (static_cast<std::int64_t>(bytes.size()) != size)
      throw FormatError(path + ": expected " + std::to_string(size) + " bytes, found " +
                            std::to_string(bytes.size()),
                        std::min<std::int64_t>(static_cast<std::int64_t>(bytes.size()), size));
  };
  const std::vector<char> bin = read_all(bin_path);
  expect(bin, n / 8, bin_path);
  const std::vector<char> label = read_all(label_path);
  expect(label, n * 2, label_path);
  const std::vector<char> invalid = read_all(invalid_path);
  expect(invalid, n / 8, invalid_path);

  const std::vector<std::uint8_t> invalid_bits = unpack_bits(invalid);
  LabelGrid out(spec, kIgnoreLabel);
  for (std::int64_t idx = 0; idx < n; ++idx) {
    const VoxelIndex v = spec.unravel(idx);
    const std::int64_t f = kitti_file_offset(v, spec);
    if (invalid_bits[f]) continue;
    std::uint16_t raw;
    std::memcpy(&raw, label.data() + 2 * f, sizeof(raw));
    out.values[idx] = map(raw);
  }
  return out;
}

void write_kitti_voxels(const LabelGrid& grid, const std::string& bin_path, const std::string& label_path,
                        const std::string& invalid_path, const LearningMap& map) {
  const GridSpec& spec = grid.spec;
  const std::int64_t n = spec.num_voxels();
  if (n % 8 != 0) throw InvalidArgument("voxel count must be a multiple of 8");
  std::array<std::uint16_t, 256> raw_of{};
  std::array<bool, 256> known{};
  std::vector<std::uint8_t> occ(n, 0), inv(n, 0);
  std::vector<std::uint16_t> raw(n, 0);
  for (std::int64_t idx = 0; idx < n; ++idx) {
    const std::uint8_t label = grid.values[idx];
    const std::int64_t f = kitti_file_offset(spec.unravel(idx), spec);
    if (label == kIgnoreLabel) {
      inv[f] = 1;
      continue;
    }
    if (!known[label]) {
      const auto r = map.inverse(label);
      if (!r) throw InvalidArgument("write_kitti_voxels: class " + std::to_string(label) + " has no raw id");
      raw_of[label] = *r;
      known[label] = true;
    }
    raw[f] = raw_of[label];
    occ[f] = label != kEmptyClass;
  }
  const auto bin = pack_bits(occ);
  write_all(bin_path, bin.data(), bin.size());
  write_all(label_path, raw.data(), raw.size() * sizeof(std::uint16_t));
  const auto invalid = pack_bits(inv);
  write_all(invalid_path, invalid.data(), invalid.size());
}

KittiSequence::KittiSequence(fs::path dir, GridSpec spec, LearningMap map, std::int64_t max_frames)
    : dir_(std::move(dir)), spec_(std::move(spec)), map_(std::move(map)) {
  const fs::path velo = dir_ / "velodyne";
  if (!fs::is_directory(velo)) throw Error("missing directory " + velo.string());
  for (const auto& entry : fs::directory_iterator(velo)) {
    if (entry.path().extension() == ".bin") scans_.push_back(entry.path());
  }
  std::sort(scans_.begin(), scans_.end());
  if (max_frames >= 0 && static_cast<std::size_t>(max_frames) < scans_.size()) scans_.resize(max_frames);
  poses_ = read_kitti_poses((dir_ / "poses.txt").string(), (dir_ / "calib.txt").string());
}

std::optional<Frame> KittiSequence::next() {
  if (cursor_ >= scans_.size()) return std::nullopt;
  const fs::path& scan = scans_[cursor_++];
  Frame f;
  try {
    f.index = std::stoll(scan.stem().string());
  } catch (const std::exception&) {
    throw FormatError("scan name is not a frame number: " + scan.string(), 0);
  }
  if (f.index < 0 || static_cast<std::size_t>(f.index) >= poses_.size())
    throw FormatError("no pose for frame " + std::to_string(f.index), f.index);
  f.cloud = read_kitti_scan(scan.string());
  f.pose = poses_[f.index];
  const fs::path vox = dir_ / "voxels" / scan.stem();
  const std::string label = vox.string() + ".label";
  const std::string invalid = vox.string() + ".invalid";
  const std::string bin = vox.string() + ".bin";
  if (fs::exists(label) && fs::exists(invalid) && fs::exists(bin))
    f.gt = read_kitti_voxels(bin, label, invalid, map_, spec_);
  return f;
}

void write_kitti_sequence(const fs::path& dir, const std::vector<Frame>& frames, const LearningMap& map) {
  fs::create_directories(dir / "velodyne");
  fs::create_directories(dir / "voxels");
  std::vector<Posed> poses;
  for (const Frame& f : frames) {
    if (f.index != static_cast<std::int64_t>(poses.size()))
      throw InvalidArgument("write_kitti_sequence: frames must be numbered 0, 1, 2, ...");
    poses.push_back(f.pose);
    const std::string name = frame_name(f.index);
    write_kitti_scan((dir / "velodyne" / (name + ".bin")).string(), f.cloud);
    if (f.gt) {
      const std::string base = (dir / "voxels" / name).string();
      write_kitti_voxels(*f.gt, base + ".bin", base + ".label", base + ".invalid", map);
    }
  }
  write_kitti_poses((dir / "poses.txt").string(), poses);
  write_kitti_calib((dir / "calib.txt").string());
}

}  // namespace losadapt
