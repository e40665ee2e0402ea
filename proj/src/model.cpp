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

#include "losadapt/model.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "binary_io.hpp"
#include "losadapt/adam.hpp"
#include "losadapt/losses.hpp"

namespace losadapt {
namespace {

constexpr char kMagic[8] = {'L', 'A', 'T', 'O', 'Y', 'M', 'D', 'L'};

class ToyReplay final : public ForwardReplay {
 public:
  explicit ToyReplay(Eigen::MatrixXd f) : features(std::move(f)) {}
  Eigen::MatrixXd features;
};

void softmax_columns(Eigen::MatrixXd& logits) {
  for (Eigen::Index v = 0; v < logits.cols(); ++v) {
    auto col = logits.col(v);
    col.array() = (col.array() - col.maxCoeff()).exp();
    col /= col.sum();
  }
}

}  // namespace

ToyVoxelModel::ToyVoxelModel(const GridSpec& spec, std::vector<int> radii) : spec_(spec), radii_(std::move(radii)) {
  spec_.validate();
  if (radii_.empty()) throw InvalidArgument("ToyVoxelModel: at least one radius required");
  for (int r : radii_) {
    if (r < 0) throw InvalidArgument("ToyVoxelModel: radii must be >= 0");
  }
  weights_ = Eigen::MatrixXd::Zero(spec_.channels(), num_features());
  bias_ = Eigen::VectorXd::Zero(spec_.channels());
}

ToyVoxelModel ToyVoxelModel::random(const GridSpec& spec, std::uint64_t seed, double scale) {
  ToyVoxelModel m(spec);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, scale);
  for (Eigen::Index k = 0; k < m.weights_.size(); ++k) m.weights_.data()[k] = dist(rng);
  return m;
}

Eigen::MatrixXd ToyVoxelModel::features(const PointCloudd& x) const {
  const int nx = spec_.dims[0];
  const int ny = spec_.dims[1];
  const int nz = spec_.dims[2];
  const std::int64_t nvox = spec_.num_voxels();

  std::vector<std::uint8_t> occ(static_cast<std::size_t>(nvox), 0);
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    if (const auto v = point_to_voxel(x.points.col(n), spec_)) occ[spec_.linear(*v)] = 1;
  }

  // Summed-volume table with a zero border: s(i, j, k) counts voxels < (i, j, k).
  const std::int64_t sx = nx + 1;
  const std::int64_t sy = ny + 1;
  std::vector<std::int32_t> sat(static_cast<std::size_t>(sx * sy * (nz + 1)), 0);
  auto at = [&](int i, int j, int k) -> std::int32_t& { return sat[i + sx * (j + sy * k)]; };
  for (int k = 1; k <= nz; ++k) {
    for (int j = 1; j <= ny; ++j) {
      for (int i = 1; i <= nx; ++i) {
        at(i, j, k) = occ[spec_.linear(VoxelIndex{i - 1, j - 1, k - 1})] + at(i - 1, j, k) + at(i, j - 1, k) +
                      at(i, j, k - 1) - at(i - 1, j - 1, k) - at(i - 1, j, k - 1) - at(i, j - 1, k - 1) +
                      at(i - 1, j - 1, k - 1);
      }
    }
  }

  Eigen::MatrixXd feat(num_features(), nvox);
  const int nr = static_cast<int>(radii_.size());
  for (std::int64_t idx = 0; idx < nvox; ++idx) {
    const VoxelIndex v = spec_.unravel(idx);
    for (int ri = 0; ri < nr; ++ri) {
      const int r = radii_[ri];
      const int x0 = std::max(v.ix - r, 0), x1 = std::min(v.ix + r + 1, nx);
      const int y0 = std::max(v.iy - r, 0), y1 = std::min(v.iy + r + 1, ny);
      const int z0 = std::max(v.iz - r, 0), z1 = std::min(v.iz + r + 1, nz);
      const std::int32_t count = at(x1, y1, z1) - at(x0, y1, z1) - at(x1, y0, z1) - at(x1, y1, z0) +
                                 at(x0, y0, z1) + at(x0, y1, z0) + at(x1, y0, z0) - at(x0, y0, z0);
      const double volume = static_cast<double>(x1 - x0) * (y1 - y0) * (z1 - z0);
      feat(ri, idx) = count / volume;
    }
    feat(nr, idx) = static_cast<double>(v.ix) / nx;
    feat(nr + 1, idx) = static_cast<double>(v.iy) / ny;
    feat(nr + 2, idx) = static_cast<double>(v.iz) / nz;
  }
  return feat;
}

ForwardPass ToyVoxelModel::forward(const PointCloudd& x) const {
  auto replay = std::make_shared<ToyReplay>(features(x));
  Eigen::MatrixXd logits = weights_ * replay->features;
  logits.colwise() += bias_;
  softmax_columns(logits);
  return ForwardPass{ProbGridd(spec_, std::move(logits)), std::move(replay)};
}

Eigen::VectorXd ToyVoxelModel::backward(const ForwardPass& pass, const ProbGridd::Matrix& grad_probs) const {
  const ToyGradients g = toy_backward(*this, pass, grad_probs);
  Eigen::VectorXd out(num_parameters());
  out << Eigen::Map<const Eigen::VectorXd>(g.weights.data(), g.weights.size()), g.bias;
  return out;
}

Eigen::VectorXd ToyVoxelModel::parameters() const {
  Eigen::VectorXd out(num_parameters());
  out << Eigen::Map<const Eigen::VectorXd>(weights_.data(), weights_.size()), bias_;
  return out;
}

void ToyVoxelModel::set_parameters(const Eigen::VectorXd& theta) {
  if (theta.size() != num_parameters()) throw InvalidArgument("set_parameters: wrong parameter count");
  Eigen::Map<Eigen::VectorXd>(weights_.data(), weights_.size()) = theta.head(weights_.size());
  bias_ = theta.tail(bias_.size());
}

Eigen::VectorXd ToyVoxelModel::parameter_mask() const {
  return mask_.size() == 0 ? Eigen::VectorXd::Ones(num_parameters()) : mask_;
}

void ToyVoxelModel::set_parameter_mask(Eigen::VectorXd mask) {
  if (mask.size() != 0 && mask.size() != num_parameters())
    throw InvalidArgument("set_parameter_mask: wrong parameter count");
  mask_ = std::move(mask);
}

Eigen::VectorXd ToyVoxelModel::calibration_mask() const {
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(num_parameters());
  for (Eigen::Index f = 0; f < weights_.cols(); ++f) mask[f * weights_.rows()] = 1.0;
  mask.tail(bias_.size()).setOnes();
  return mask;
}

void ToyVoxelModel::save(std::ostream& os) const {
  binio::Writer w(os);
  w.bytes(kMagic, sizeof(kMagic));
  w.pod(kFormatVersion);
  binio::write_spec(w, spec_);
  w.pod(static_cast<std::uint32_t>(radii_.size()));
  for (int r : radii_) w.pod(static_cast<std::int32_t>(r));
  w.pod(static_cast<std::uint32_t>(weights_.rows()));
  w.pod(static_cast<std::uint32_t>(weights_.cols()));
  for (Eigen::Index r = 0; r < weights_.rows(); ++r) {
    for (Eigen::Index c = 0; c < weights_.cols(); ++c) w.pod(weights_(r, c));
  }
  for (Eigen::Index r = 0; r < bias_.size(); ++r) w.pod(bias_[r]);
  w.pod(static_cast<std::uint8_t>(mask_.size() != 0));
  for (Eigen::Index k = 0; k < mask_.size(); ++k) w.pod(mask_[k]);
  w.check();
}

ToyVoxelModel ToyVoxelModel::load(std::istream& is) {
  binio::Reader r(is, "toy model checkpoint");
  r.expect_magic(kMagic, sizeof(kMagic));
  if (r.pod<std::uint32_t>() != kFormatVersion) r.fail("unsupported version");
  const GridSpec spec = binio::read_spec(r);
  const auto nr = r.pod<std::uint32_t>();
  if (nr == 0 || nr > 64) r.fail("bad radius count");
  std::vector<int> radii(nr);
  for (auto& rad : radii) rad = r.pod<std::int32_t>();
  ToyVoxelModel m(spec, radii);
  const auto rows = r.pod<std::uint32_t>();
  const auto cols = r.pod<std::uint32_t>();
  if (rows != static_cast<std::uint32_t>(spec.channels()) || cols != static_cast<std::uint32_t>(m.num_features()))
    r.fail("weight shape does not match spec");
  for (Eigen::Index i = 0; i < m.weights_.rows(); ++i) {
    for (Eigen::Index c = 0; c < m.weights_.cols(); ++c) m.weights_(i, c) = r.pod<double>();
  }
  for (Eigen::Index i = 0; i < m.bias_.size(); ++i) m.bias_[i] = r.pod<double>();
  if (r.pod<std::uint8_t>() != 0) {
    m.mask_.resize(m.num_parameters());
    for (Eigen::Index k = 0; k < m.mask_.size(); ++k) m.mask_[k] = r.pod<double>();
  }
  return m;
}

void ToyVoxelModel::save_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  save(os);
}

ToyVoxelModel ToyVoxelModel::load_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return load(is);
}

ProbGridd toy_predict(const ToyVoxelModel& model, const PointCloudd& x, const GridSpec& spec) {
  require_compatible(model.spec(), spec, "toy_predict");
  return model.predict(x);
}

ToyGradients toy_backward(const ToyVoxelModel& model, const ForwardPass& pass, const ProbGridd::Matrix& grad_out) {
  const auto* replay = dynamic_cast<const ToyReplay*>(pass.replay.get());
  if (!replay) throw InvalidArgument("toy_backward: pass was not produced by a ToyVoxelModel");
  const auto& p = pass.probs.probs;
  if (grad_out.rows() != p.rows() || grad_out.cols() != p.cols())
    throw SpecMismatch("toy_backward: gradient shape differs from output");
  if (p.rows() != model.weights().rows() || replay->features.rows() != model.weights().cols())
    throw SpecMismatch("toy_backward: pass does not match model shape");

  // Softmax Jacobian-vector product: dz = p * (g - <g, p>).
  const Eigen::RowVectorXd inner = (grad_out.array() * p.array()).colwise().sum();
  Eigen::MatrixXd dlogits = grad_out;
  dlogits.rowwise() -= inner;
  dlogits.array() *= p.array();

  ToyGradients g;
  g.weights = dlogits * replay->features.transpose();
  g.bias = dlogits.rowwise().sum();
  return g;
}

ToyVoxelModel pretrain(const ToyVoxelModel& model, const std::vector<TrainingSample>& dataset, int epochs,
                       double lr, std::uint64_t seed, std::vector<double>* epoch_losses) {
  if (dataset.empty()) throw InvalidArgument("pretrain: empty dataset");
  if (epochs < 0) throw InvalidArgument("pretrain: epochs must be >= 0");
  ToyVoxelModel out = model;
  if (epochs == 0) return out;

  AdamState<double> adam(out.num_parameters(), lr);
  const Eigen::VectorXd mask = out.parameter_mask();
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k : order) {
      const TrainingSample& s = dataset[k];
      require_compatible(out.spec(), s.gt.spec, "pretrain");
      const ForwardPass pass = out.forward(s.cloud);
      const GridLoss<double> loss = sem_loss(pass.probs, s.gt);
      Eigen::VectorXd theta = out.parameters();
      adam_step<double>(theta, out.backward(pass, loss.grad).cwiseProduct(mask), adam);
      out.set_parameters(theta);
    }
    if (epoch_losses) {
      // Loss of the parameters as they stand at the end of the epoch.
      double sum = 0.0;
      for (const TrainingSample& s : dataset) sum += sem_loss(out.predict(s.cloud), s.gt).value.total;
      epoch_losses->push_back(sum / static_cast<double>(dataset.size()));
    }
  }
  return out;
}

}  // namespace losadapt
