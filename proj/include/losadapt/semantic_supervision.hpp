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

#ifndef LOSADAPT_SEMANTIC_SUPERVISION_HPP_
#define LOSADAPT_SEMANTIC_SUPERVISION_HPP_

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "losadapt/geometry.hpp"
#include "losadapt/grid.hpp"

namespace losadapt {

template <typename Scalar>
struct ReliabilityGrid {
  GridSpec spec;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> values;
};

/// Reliability of one distribution: 1 - H(p) / log(n), natural log, 0 log 0 = 0.
/// Snapped to exactly 0 or 1 within a few ulps so the extremes are exact.
template <typename Derived>
typename Derived::Scalar reliability_of(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = p.size();
  if (n < 2) return Scalar(1);
  Scalar h = 0;
  for (Eigen::Index c = 0; c < n; ++c) {
    const Scalar pc = p[c];
    if (pc > Scalar(0)) h -= pc * std::log(pc);
  }
  Scalar r = Scalar(1) - h / std::log(static_cast<Scalar>(n));
  constexpr Scalar kSnap = 16 * std::numeric_limits<Scalar>::epsilon();
  if (r < kSnap) r = 0;
  if (r > Scalar(1) - kSnap) r = 1;
  return r;
}

template <typename Scalar>
ReliabilityGrid<Scalar> reliability(const ProbGrid<Scalar>& p) {
  ReliabilityGrid<Scalar> out{p.spec, Eigen::Array<Scalar, Eigen::Dynamic, 1>(p.probs.cols())};
  for (Eigen::Index v = 0; v < p.probs.cols(); ++v) out.values[v] = reliability_of(p.probs.col(v));
  return out;
}

/// Argmax where reliability is strictly above `tau`, 255 elsewhere.
template <typename Scalar>
LabelGrid pseudo_gt(const ProbGrid<Scalar>& p, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidArgument("pseudo_gt: tau must lie in [0, 1]");
  LabelGrid out = argmax_labels(p);
  for (Eigen::Index v = 0; v < p.probs.cols(); ++v) {
    if (!(static_cast<double>(reliability_of(p.probs.col(v))) > tau)) out.values[v] = kIgnoreLabel;
  }
  return out;
}

/// Fills unconfident voxels of the current pseudo-GT from the projected one and
/// drops voxels where both are confident but disagree.
LabelGrid aggregate_pseudo_gt(const LabelGrid& a_cur, const LabelGrid& a_proj);

/// Forward-scatters every labelled voxel center through `t` into a fresh
/// all-255 grid of the same spec. Collisions keep the label whose transformed
/// center lies nearest its destination voxel center (ties: lowest class).
/// Centers landing outside the grid are dropped.
LabelGrid project_labels(const LabelGrid& a, const Posed& t);

}  // namespace losadapt

#endif  // LOSADAPT_SEMANTIC_SUPERVISION_HPP_
