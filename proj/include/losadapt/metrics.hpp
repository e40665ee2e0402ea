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

#ifndef LOSADAPT_METRICS_HPP_
#define LOSADAPT_METRICS_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "losadapt/grid.hpp"

namespace losadapt {

/// Intersection/union counters for semantic classes 1..C and for binary
/// occupancy. Voxels whose ground truth is 255 are skipped entirely.
class MetricAccumulator {
 public:
  explicit MetricAccumulator(int num_classes = 19);

  void accumulate(const LabelGrid& pred, const LabelGrid& gt);
  /// Adds another accumulator's counts; both must track the same class count.
  void merge(const MetricAccumulator& other);

  int num_classes() const { return num_classes_; }
  std::int64_t intersection(int c) const { return inter_.at(c); }
  std::int64_t union_count(int c) const { return union_.at(c); }
  std::int64_t binary_intersection() const { return bin_inter_; }
  std::int64_t binary_union() const { return bin_union_; }
  std::int64_t valid_voxels() const { return valid_; }
  std::int64_t frames() const { return frames_; }

  /// IoU of class c in 1..C; empty when the class never appears in either grid.
  std::optional<double> class_iou(int c) const;
  /// Mean IoU over classes with a non-zero union; 0 when there are none.
  double miou() const;
  /// Completion IoU of (label != 0); 0 when the union is empty.
  double ciou() const;

  friend bool operator==(const MetricAccumulator&, const MetricAccumulator&) = default;

 private:
  int num_classes_;
  std::vector<std::int64_t> inter_;  // index 0 unused
  std::vector<std::int64_t> union_;
  std::int64_t bin_inter_ = 0;
  std::int64_t bin_union_ = 0;
  std::int64_t valid_ = 0;
  std::int64_t frames_ = 0;
};

}  // namespace losadapt

#endif  // LOSADAPT_METRICS_HPP_
