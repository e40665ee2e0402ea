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

#ifndef LOSADAPT_MODEL_HPP_
#define LOSADAPT_MODEL_HPP_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "losadapt/geometry.hpp"
#include "losadapt/grid.hpp"

namespace losadapt {

/// Whatever a model needs to run its backward pass later. Opaque to callers.
class ForwardReplay {
 public:
  virtual ~ForwardReplay() = default;
};

struct ForwardPass {
  ProbGridd probs;
  std::shared_ptr<const ForwardReplay> replay;
};

/// A semantic scene completion model: point cloud in, per-voxel class
/// distribution out, with differentiable parameters exposed as a flat vector.
class SscModel {
 public:
  virtual ~SscModel() = default;

  virtual const GridSpec& spec() const = 0;

  virtual ForwardPass forward(const PointCloudd& x) const = 0;
  ProbGridd predict(const PointCloudd& x) const { return forward(x).probs; }

  /// dL/dtheta for a pass previously produced by forward(), given dL/dp.
  /// The pass may come from older parameters; the replay is used as stored.
  virtual Eigen::VectorXd backward(const ForwardPass& pass, const ProbGridd::Matrix& grad_probs) const = 0;

  virtual Eigen::Index num_parameters() const = 0;
  virtual Eigen::VectorXd parameters() const = 0;
  virtual void set_parameters(const Eigen::VectorXd& theta) = 0;

  /// 1 for parameters adaptation may touch, 0 for frozen ones.
  virtual Eigen::VectorXd parameter_mask() const { return Eigen::VectorXd::Ones(num_parameters()); }

  virtual std::unique_ptr<SscModel> clone() const = 0;

  /// Self-describing checkpoint; see docs/formats.md.
  virtual void save(std::ostream& os) const = 0;
};

/// Linear-softmax voxel classifier over occupancy-density features.
///
/// Features per voxel: the fraction of occupied voxels in the cube of each
/// radius (clipped to the grid), then ix/L, iy/W, iz/H. Parameters are laid out
/// as the (C+1) x F weight matrix in column-major order followed by the bias.
class ToyVoxelModel final : public SscModel {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  ToyVoxelModel() = default;
  explicit ToyVoxelModel(const GridSpec& spec, std::vector<int> radii = {0, 1, 2, 4});

  /// Small Gaussian weights from `seed`, zero bias.
  static ToyVoxelModel random(const GridSpec& spec, std::uint64_t seed, double scale = 0.01);

  const GridSpec& spec() const override { return spec_; }
  const std::vector<int>& radii() const { return radii_; }
  int num_features() const { return static_cast<int>(radii_.size()) + 3; }

  Eigen::MatrixXd& weights() { return weights_; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  Eigen::VectorXd& bias() { return bias_; }
  const Eigen::VectorXd& bias() const { return bias_; }

  /// Features x voxels matrix for a cloud.
  Eigen::MatrixXd features(const PointCloudd& x) const;

  ForwardPass forward(const PointCloudd& x) const override;
  Eigen::VectorXd backward(const ForwardPass& pass, const ProbGridd::Matrix& grad_probs) const override;

  Eigen::Index num_parameters() const override { return weights_.size() + bias_.size(); }
  Eigen::VectorXd parameters() const override;
  void set_parameters(const Eigen::VectorXd& theta) override;
  Eigen::VectorXd parameter_mask() const override;
  /// Restrict adaptation; an empty vector restores "all trainable".
  void set_parameter_mask(Eigen::VectorXd mask);
  /// Mask selecting every bias plus the "empty" row of the weights: a small
  /// calibration subset, the toy analogue of adapting only a few layers.
  Eigen::VectorXd calibration_mask() const;

  std::unique_ptr<SscModel> clone() const override { return std::make_unique<ToyVoxelModel>(*this); }

  void save(std::ostream& os) const override;
  static ToyVoxelModel load(std::istream& is);
  void save_file(const std::string& path) const;
  static ToyVoxelModel load_file(const std::string& path);

 private:
  GridSpec spec_;
  std::vector<int> radii_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
  Eigen::VectorXd mask_;  // empty means all trainable
};

/// Gradients of the toy model split back into weight/bias shapes.
struct ToyGradients {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

/// Voxelizes `x`, scores every voxel and applies a per-voxel softmax.
ProbGridd toy_predict(const ToyVoxelModel& model, const PointCloudd& x, const GridSpec& spec);

/// Chains `grad_out` through the softmax and the linear layer.
ToyGradients toy_backward(const ToyVoxelModel& model, const ForwardPass& pass,
                          const ProbGridd::Matrix& grad_out);

struct TrainingSample {
  PointCloudd cloud;
  LabelGrid gt;
};

/// Supervised training with sem_loss and Adam, one full-grid step per sample,
/// visiting samples in an order shuffled from `seed` every epoch. Mean training
/// loss per epoch is appended to `epoch_losses` when given.
ToyVoxelModel pretrain(const ToyVoxelModel& model, const std::vector<TrainingSample>& dataset, int epochs,
                       double lr, std::uint64_t seed, std::vector<double>* epoch_losses = nullptr);

}  // namespace losadapt

#endif  // LOSADAPT_MODEL_HPP_
