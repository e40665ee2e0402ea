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

// Cross-entropy and Lovasz-softmax losses defined directly on probabilities,
// with analytic gradients w.r.t. those probabilities. Voxels labelled 255 are
// ignored everywhere. Callers chain the returned gradients through their own
// softmax.

#ifndef LOSADAPT_LOSSES_HPP_
#define LOSADAPT_LOSSES_HPP_

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "losadapt/errors.hpp"
#include "losadapt/grid.hpp"

namespace losadapt {

template <typename Scalar>
struct LossValue {
  Scalar total = 0;
  Scalar ce = 0;
  Scalar lovasz = 0;
  std::int64_t num_supervised_voxels = 0;

  LossValue& operator+=(const LossValue& o) {
    total += o.total;
    ce += o.ce;
    lovasz += o.lovasz;
    num_supervised_voxels += o.num_supervised_voxels;
    return *this;
  }
};

/// Scalar loss plus its gradient, shaped like the probabilities it was computed on.
template <typename Scalar>
struct LossGrad {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Scalar value = 0;
  Matrix grad;
  std::int64_t num_supervised = 0;
};

/// Loss on a full ProbGrid: component values plus dL/dp.
template <typename Scalar>
struct GridLoss {
  LossValue<Scalar> value;
  typename ProbGrid<Scalar>::Matrix grad;
};

using Labels = LabelGrid::Values;

namespace detail {

inline void check_targets(const Labels& target, Eigen::Index channels, Eigen::Index cols) {
  if (target.size() != cols) throw SpecMismatch("loss: target length differs from voxel count");
  for (Eigen::Index v = 0; v < target.size(); ++v) {
    if (target[v] != kIgnoreLabel && target[v] >= channels)
      throw InvalidArgument("loss: target class " + std::to_string(target[v]) +
                            " outside channel range");
  }
}

}  // namespace detail

inline constexpr double kProbClamp = 1e-12;

/// Mean of -log(p[target]) over supervised voxels; p clamped at 1e-12.
template <typename Derived>
LossGrad<typename Derived::Scalar> ce_loss(const Eigen::MatrixBase<Derived>& probs, const Labels& target) {
  using Scalar = typename Derived::Scalar;
  detail::check_targets(target, probs.rows(), probs.cols());
  LossGrad<Scalar> out;
  out.grad.setZero(probs.rows(), probs.cols());
  std::int64_t n = 0;
  for (Eigen::Index v = 0; v < target.size(); ++v) n += target[v] != kIgnoreLabel;
  out.num_supervised = n;
  if (n == 0) return out;

  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  Scalar sum = 0;
  for (Eigen::Index v = 0; v < target.size(); ++v) {
    if (target[v] == kIgnoreLabel) continue;
    const Scalar p = std::max(probs(target[v], v), Scalar(kProbClamp));
    sum -= std::log(p);
    out.grad(target[v], v) = -inv_n / p;
  }
  out.value = sum * inv_n;
  return out;
}

/// Lovasz-softmax: per class present among the supervised targets, the Lovasz
/// extension of the Jaccard loss evaluated at the per-voxel errors, averaged
/// over those classes.
template <typename Derived>
LossGrad<typename Derived::Scalar> lovasz_softmax_loss(const Eigen::MatrixBase<Derived>& probs,
                                                       const Labels& target) {
  using Scalar = typename Derived::Scalar;
  detail::check_targets(target, probs.rows(), probs.cols());
  LossGrad<Scalar> out;
  out.grad.setZero(probs.rows(), probs.cols());

  std::vector<Eigen::Index> sup;
  sup.reserve(target.size());
  for (Eigen::Index v = 0; v < target.size(); ++v) {
    if (target[v] != kIgnoreLabel) sup.push_back(v);
  }
  out.num_supervised = static_cast<std::int64_t>(sup.size());
  if (sup.empty()) return out;

  std::vector<std::int64_t> class_count(probs.rows(), 0);
  for (Eigen::Index v : sup) ++class_count[target[v]];

  const std::size_t n = sup.size();
  std::vector<Scalar> errors(n);
  std::vector<std::size_t> order(n);
  std::vector<Scalar> jac_grad(n);
  int present = 0;
  Scalar total = 0;

  for (Eigen::Index c = 0; c < probs.rows(); ++c) {
    const std::int64_t gts = class_count[c];
    if (gts == 0) continue;
    ++present;
    for (std::size_t k = 0; k < n; ++k) {
      const Eigen::Index v = sup[k];
      errors[k] = target[v] == c ? Scalar(1) - probs(c, v) : probs(c, v);
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return errors[a] > errors[b]; });

    // Gradient of the Jaccard loss's Lovasz extension along the sorted errors.
    std::int64_t fg_seen = 0;
    std::int64_t bg_seen = 0;
    Scalar prev_jac = 0;
    Scalar class_loss = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const bool fg = target[sup[order[k]]] == c;
      fg_seen += fg;
      bg_seen += !fg;
      const Scalar inter = static_cast<Scalar>(gts - fg_seen);
      const Scalar uni = static_cast<Scalar>(gts + bg_seen);
      const Scalar jac = Scalar(1) - inter / uni;
      jac_grad[k] = jac - prev_jac;
      prev_jac = jac;
      class_loss += errors[order[k]] * jac_grad[k];
    }
    total += class_loss;
    for (std::size_t k = 0; k < n; ++k) {
      const Eigen::Index v = sup[order[k]];
      const Scalar de_dp = target[v] == c ? Scalar(-1) : Scalar(1);
      out.grad(c, v) += jac_grad[k] * de_dp;
    }
  }
  out.value = total / present;
  out.grad /= static_cast<Scalar>(present);
  return out;
}

/// ce + lovasz on the two-channel completion view of `p_i` against a
/// {0, 1, 255} map. The gradient of the occupied channel flows to the largest
/// non-empty class at each voxel (lowest index on ties).
template <typename Scalar>
GridLoss<Scalar> comp_loss(const ProbGrid<Scalar>& p_i, const LabelGrid& v_comp) {
  require_compatible(p_i.spec, v_comp.spec, "comp_loss");
  GridLoss<Scalar> out;
  out.grad.setZero(p_i.probs.rows(), p_i.probs.cols());

  const Eigen::Matrix<Scalar, 2, Eigen::Dynamic> binary = to_binary_completion(p_i);
  const LossGrad<Scalar> ce = ce_loss(binary, v_comp.values);
  if (ce.num_supervised == 0) return out;
  const LossGrad<Scalar> lz = lovasz_softmax_loss(binary, v_comp.values);

  out.value.ce = ce.value;
  out.value.lovasz = lz.value;
  out.value.total = ce.value + lz.value;
  out.value.num_supervised_voxels = ce.num_supervised;

  const auto& probs = p_i.probs;
  for (Eigen::Index v = 0; v < probs.cols(); ++v) {
    if (v_comp.values[v] == kIgnoreLabel) continue;
    out.grad(0, v) = ce.grad(0, v) + lz.grad(0, v);
    Eigen::Index best = 1;
    for (Eigen::Index c = 2; c < probs.rows(); ++c) {
      if (probs(c, v) > probs(best, v)) best = c;
    }
    out.grad(best, v) = ce.grad(1, v) + lz.grad(1, v);
  }
  return out;
}

/// ce + lovasz over all C+1 channels.
template <typename Scalar>
GridLoss<Scalar> sem_loss(const ProbGrid<Scalar>& p_i, const LabelGrid& v_sem) {
  require_compatible(p_i.spec, v_sem.spec, "sem_loss");
  GridLoss<Scalar> out;
  const LossGrad<Scalar> ce = ce_loss(p_i.probs, v_sem.values);
  if (ce.num_supervised == 0) {
    out.grad.setZero(p_i.probs.rows(), p_i.probs.cols());
    return out;
  }
  const LossGrad<Scalar> lz = lovasz_softmax_loss(p_i.probs, v_sem.values);
  out.value.ce = ce.value;
  out.value.lovasz = lz.value;
  out.value.total = ce.value + lz.value;
  out.value.num_supervised_voxels = ce.num_supervised;
  out.grad = ce.grad + lz.grad;
  return out;
}

/// comp_loss + sem_loss on the same prediction.
template <typename Scalar>
GridLoss<Scalar> combined_loss(const ProbGrid<Scalar>& p, const LabelGrid& v_comp, const LabelGrid& v_sem) {
  GridLoss<Scalar> out = comp_loss(p, v_comp);
  const GridLoss<Scalar> sem = sem_loss(p, v_sem);
  out.value += sem.value;
  out.grad += sem.grad;
  return out;
}

}  // namespace losadapt

#endif  // LOSADAPT_LOSSES_HPP_
