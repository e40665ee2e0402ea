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

#ifndef LOSADAPT_ADAM_HPP_
#define LOSADAPT_ADAM_HPP_

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "losadapt/errors.hpp"

namespace losadapt {

template <typename Scalar>
struct AdamState {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector m;
  Vector v;
  std::int64_t step = 0;
  Scalar lr = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);

  AdamState() = default;
  AdamState(Eigen::Index num_params, Scalar learning_rate)
      : m(Vector::Zero(num_params)), v(Vector::Zero(num_params)), lr(learning_rate) {}
};

/// Bias-corrected Adam update. A non-finite gradient throws before anything
/// is modified.
template <typename Scalar>
void adam_step(Eigen::Ref<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> params,
               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& grads, AdamState<Scalar>& state) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw InvalidArgument("adam_step: parameter/gradient/state shapes differ");
  if (!grads.allFinite()) throw NumericError("adam_step: non-finite gradient");

  ++state.step;
  state.m = state.beta1 * state.m + (Scalar(1) - state.beta1) * grads;
  state.v = state.beta2 * state.v + (Scalar(1) - state.beta2) * grads.cwiseAbs2();
  const Scalar bc1 = Scalar(1) - std::pow(state.beta1, static_cast<Scalar>(state.step));
  const Scalar bc2 = Scalar(1) - std::pow(state.beta2, static_cast<Scalar>(state.step));
  params.array() -= state.lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + state.eps);
}

}  // namespace losadapt

#endif  // LOSADAPT_ADAM_HPP_
