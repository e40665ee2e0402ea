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

#include "losadapt/metrics.hpp"

namespace losadapt {

MetricAccumulator::MetricAccumulator(int num_classes)
    : num_classes_(num_classes), inter_(num_classes + 1, 0), union_(num_classes + 1, 0) {
  if (num_classes < 1 || num_classes > 254) throw InvalidArgument("num_classes must be in [1, 254]");
}

void MetricAccumulator::accumulate(const LabelGrid& pred, const LabelGrid& gt) {
  require_compatible(pred.spec, gt.spec, "accumulate");
  if (gt.spec.num_classes != num_classes_) throw SpecMismatch("accumulate: class count differs from accumulator");
  const Eigen::Index n = gt.values.size();
  for (Eigen::Index v = 0; v < n; ++v) {
    if (pred.values[v] > num_classes_) throw InvalidArgument("accumulate: prediction holds an invalid label");
  }
  for (Eigen::Index v = 0; v < n; ++v) {
    const int g = gt.values[v];
    if (g == kIgnoreLabel) continue;
    if (g > num_classes_) throw InvalidArgument("accumulate: ground truth holds an invalid label");
    const int p = pred.values[v];
    ++valid_;
    if (p == g) {
      if (g != kEmptyClass) {
        ++inter_[g];
        ++union_[g];
      }
    } else {
      if (g != kEmptyClass) ++union_[g];
      if (p != kEmptyClass) ++union_[p];
    }
    const bool po = p != kEmptyClass;
    const bool go = g != kEmptyClass;
    bin_inter_ += po && go;
    bin_union_ += po || go;
  }
  ++frames_;
}

void MetricAccumulator::merge(const MetricAccumulator& other) {
  if (other.num_classes_ != num_classes_) throw SpecMismatch("merge: class counts differ");
  for (int c = 0; c <= num_classes_; ++c) {
    inter_[c] += other.inter_[c];
    union_[c] += other.union_[c];
  }
  bin_inter_ += other.bin_inter_;
  bin_union_ += other.bin_union_;
  valid_ += other.valid_;
  frames_ += other.frames_;
}

std::optional<double> MetricAccumulator::class_iou(int c) const {
  if (c < 1 || c > num_classes_) throw InvalidArgument("class_iou: class out of range");
  if (union_[c] == 0) return std::nullopt;
  return static_cast<double>(inter_[c]) / static_cast<double>(union_[c]);
}

double MetricAccumulator::miou() const {
  double sum = 0.0;
  int n = 0;
  for (int c = 1; c <= num_classes_; ++c) {
    if (const auto iou = class_iou(c)) {
      sum += *iou;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / n;
}

double MetricAccumulator::ciou() const {
  return bin_union_ == 0 ? 0.0 : static_cast<double>(bin_inter_) / static_cast<double>(bin_union_);
}

}  // namespace losadapt
