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

#include "losadapt/scheduler.hpp"

#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "losadapt/config.hpp"
#include "losadapt/semantic_supervision.hpp"

namespace losadapt {
namespace {

constexpr char kCheckpointMagic[8] = {'L', 'A', 'S', 'C', 'H', 'E', 'D', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

std::uint64_t noise_seed_for(std::uint64_t base, std::int64_t step) {
  // splitmix64 finalizer so neighbouring steps get unrelated streams.
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(step + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

void SchedulerConfig::validate() const {
  if (frame_diff < 0) throw InvalidArgument("frame_diff must be >= 0");
  if (iters_per_step < 0) throw InvalidArgument("iters_per_step must be >= 0");
  if (!(lr_moment > 0.0) || !(lr_gradual > 0.0)) throw InvalidArgument("learning rates must be > 0");
  if (!(tau_reliability >= 0.0 && tau_reliability <= 1.0)) throw InvalidArgument("tau_reliability must lie in [0, 1]");
  if (!(pose_noise_sigma >= 0.0)) throw InvalidArgument("pose_noise_sigma must be >= 0");
  if (static_mask.channels() == 0) throw InvalidArgument("static mask is empty");
  if ((use_moment || use_gradual) && !use_comp_loss && !use_sem_loss)
    throw InvalidArgument("a model is set to adapt but both losses are disabled");
}

AdaptBuffer::AdaptBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw InvalidArgument("AdaptBuffer capacity must be >= 1");
}

void AdaptBuffer::push(Record r) {
  if (!records_.empty() && r.step <= records_.back().step)
    throw InvalidArgument("AdaptBuffer: steps must increase");
  records_.push_back(std::move(r));
  while (records_.size() > capacity_) records_.pop_front();
}

const AdaptBuffer::Record* AdaptBuffer::find(std::int64_t step) const {
  for (const Record& r : records_) {
    if (r.step == step) return &r;
  }
  return nullptr;
}

std::optional<std::int64_t> AdaptBuffer::oldest() const {
  if (records_.empty()) return std::nullopt;
  return records_.front().step;
}

LabelGrid agg(const ProbGridd& p_m, const ProbGridd& p_g, const StaticClassMask& mask) {
  require_compatible(p_m.spec, p_g.spec, "agg");
  LabelGrid out = argmax_labels(p_m);
  const LabelGrid g = argmax_labels(p_g);
  for (Eigen::Index v = 0; v < out.values.size(); ++v) {
    if (mask.is_static(g.values[v])) out.values[v] = g.values[v];
  }
  return out;
}

TtaScheduler::TtaScheduler(const SscModel& pretrained, SchedulerConfig config)
    : config_(std::move(config)),
      base_(pretrained.clone()),
      gradual_(pretrained.clone()),
      gradual_adam_(pretrained.num_parameters(), config_.lr_gradual),
      buffer_(static_cast<std::size_t>(config_.frame_diff) + 1) {
  config_.validate();
  if (config_.static_mask.channels() != pretrained.spec().channels())
    throw SpecMismatch("static mask channel count differs from the model's");
}

LossValue<double> TtaScheduler::update(SscModel& model, AdamState<double>& adam, const ForwardPass& pass,
                                       const Supervision& sup) const {
  GridLoss<double> loss;
  loss.grad.setZero(pass.probs.probs.rows(), pass.probs.probs.cols());
  if (config_.use_comp_loss) {
    const GridLoss<double> c = comp_loss(pass.probs, sup.comp);
    loss.value += c.value;
    loss.grad += c.grad;
  }
  if (config_.use_sem_loss) {
    const GridLoss<double> s = sem_loss(pass.probs, sup.sem);
    loss.value += s.value;
    loss.grad += s.grad;
  }
  if (loss.value.num_supervised_voxels == 0) return loss.value;

  Eigen::VectorXd theta = model.parameters();
  adam_step<double>(theta, model.backward(pass, loss.grad).cwiseProduct(model.parameter_mask()), adam);
  model.set_parameters(theta);
  return loss.value;
}

StepResult TtaScheduler::step(std::int64_t index, const PointCloudd& x, const Posed& pose_world) {
  const auto t0 = std::chrono::steady_clock::now();
  if (last_step_ && index <= *last_step_)
    throw InvalidArgument("step " + std::to_string(index) + " arrived after step " + std::to_string(*last_step_));
  if (!first_step_) first_step_ = index;
  last_step_ = index;

  const GridSpec& spec = base_->spec();
  const StaticClassMask& mask = config_.static_mask;
  const double tau = config_.tau_reliability;

  std::unique_ptr<SscModel> moment = base_->clone();
  ForwardPass pm = moment->forward(x);
  ForwardPass pg = gradual_->forward(x);
  buffer_.push(AdaptBuffer::Record{index, x, pose_world, pm.probs, pg});

  StepResult result;
  result.step = index;

  // Source record for cross-moment supervision; none at sequence start.
  const AdaptBuffer::Record* prev = nullptr;
  bool supervised = false;
  if (config_.adapts()) {
    if (config_.frame_diff == 0) {
      supervised = true;
    } else if (index - config_.frame_diff >= *first_step_) {
      prev = buffer_.find(index - config_.frame_diff);
      if (!prev) throw Error("buffer miss: step " + std::to_string(index - config_.frame_diff) + " not buffered");
      supervised = true;
    }
  }

  if (supervised) {
    result.diag.adapted = true;
    const LabelGrid all_ignore(spec, kIgnoreLabel);

    Posed t_ji;  // frame j -> frame i
    Posed t_ij;
    if (prev) {
      t_ji = relative_pose(prev->pose, pose_world);
      if (config_.pose_noise_sigma > 0.0)
        t_ji = perturb_pose(t_ji, config_.pose_noise_sigma, noise_seed_for(config_.noise_seed, index));
      t_ij = t_ji.inverse();
    }

    if (config_.use_moment && config_.iters_per_step > 0) {
      AdamState<double> adam(moment->num_parameters(), config_.lr_moment);
      Supervision sup{all_ignore, all_ignore};
      LabelGrid projected(spec, kIgnoreLabel);
      if (prev) {
        if (config_.use_comp_loss) {
          const auto cls_j = classify_points(prev->cloud, prev->p_moment);
          sup.comp = build_comp_map(transform_cloud(prev->cloud, t_ji), cls_j, t_ji.translation, mask, spec,
                                    &result.diag.comp_stats);
        }
        if (config_.use_sem_loss) projected = project_labels(pseudo_gt(prev->p_moment, tau), t_ji);
      }
      try {
        for (int it = 0; it < config_.iters_per_step; ++it) {
          const ForwardPass pass = it == 0 ? pm : moment->forward(x);
          if (config_.use_sem_loss) sup.sem = aggregate_pseudo_gt(pseudo_gt(pass.probs, tau), projected);
          result.diag.moment_loss = update(*moment, adam, pass, sup);
        }
        pm = moment->forward(x);
      } catch (const NumericError&) {
        // Aborted; keep the pre-trained prediction.
        result.diag.adapted = false;
      }
    }

    if (config_.use_gradual && config_.gradual_iters() > 0) {
      const Eigen::VectorXd theta_before = gradual_->parameters();
      const AdamState<double> adam_before = gradual_adam_;
      try {
        for (int it = 0; it < config_.gradual_iters(); ++it) {
          const ForwardPass source = it == 0 ? pg : gradual_->forward(x);
          Supervision sup{all_ignore, all_ignore};
          if (!prev) {
            // Current-moment pseudo-GT only.
            if (config_.use_sem_loss) sup.sem = pseudo_gt(source.probs, tau);
            result.diag.gradual_loss = update(*gradual_, gradual_adam_, source, sup);
            continue;
          }
          const ForwardPass target =
              config_.stale_gradual_graph ? prev->pass_gradual : gradual_->forward(prev->cloud);
          if (config_.use_comp_loss) {
            const auto cls_i = classify_points(x, source.probs);
            sup.comp = build_comp_map(transform_cloud(x, t_ij), cls_i, t_ij.translation, mask, spec);
          }
          if (config_.use_sem_loss) {
            sup.sem = aggregate_pseudo_gt(pseudo_gt(target.probs, tau),
                                          project_labels(pseudo_gt(source.probs, tau), t_ij));
          }
          result.diag.gradual_loss = update(*gradual_, gradual_adam_, target, sup);
        }
      } catch (const NumericError&) {
        gradual_->set_parameters(theta_before);
        gradual_adam_ = adam_before;
        result.diag.adapted = false;
      }
      pg = gradual_->forward(x);
    }
  }

  if (config_.use_moment && config_.use_gradual) {
    result.prediction = agg(pm.probs, pg.probs, mask);
  } else if (config_.use_gradual) {
    result.prediction = argmax_labels(pg.probs);
  } else {
    result.prediction = argmax_labels(pm.probs);
  }
  result.p_moment = std::move(pm.probs);
  result.p_gradual = std::move(pg.probs);
  result.diag.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

std::string TtaScheduler::snapshot_gradual() const {
  std::ostringstream os(std::ios::binary);
  gradual_->save(os);
  return os.str();
}

void TtaScheduler::restore_gradual(const std::string& snapshot) {
  std::istringstream is(snapshot, std::ios::binary);
  std::unique_ptr<SscModel> m = load_model(is);
  if (!m->spec().compatible(base_->spec()) || m->num_parameters() != base_->num_parameters())
    throw SpecMismatch("restore_gradual: snapshot describes a different model");
  // Load into a clone of the base so settings such as the parameter mask carry over.
  std::unique_ptr<SscModel> g = base_->clone();
  g->set_parameters(m->parameters());
  std::ostringstream check(std::ios::binary);
  g->save(check);
  if (check.str() != snapshot) throw SpecMismatch("restore_gradual: snapshot describes a different model");
  gradual_ = std::move(g);
}

void TtaScheduler::save_checkpoint(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  binio::Writer w(os);
  w.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.pod(kCheckpointVersion);
  w.pod(static_cast<std::int64_t>(last_step_.value_or(-1)));
  w.string(to_json(config_).dump());
  w.string(snapshot_gradual());
  w.pod(static_cast<std::int64_t>(gradual_adam_.step));
  w.pod(static_cast<std::uint64_t>(gradual_adam_.m.size()));
  for (Eigen::Index k = 0; k < gradual_adam_.m.size(); ++k) w.pod(gradual_adam_.m[k]);
  for (Eigen::Index k = 0; k < gradual_adam_.v.size(); ++k) w.pod(gradual_adam_.v[k]);
  w.check();
}

TtaScheduler TtaScheduler::load_checkpoint(const std::string& path, const SscModel& pretrained) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  binio::Reader r(is, "scheduler checkpoint");
  r.expect_magic(kCheckpointMagic, sizeof(kCheckpointMagic));
  if (r.pod<std::uint32_t>() != kCheckpointVersion) r.fail("unsupported version");
  const auto last = r.pod<std::int64_t>();
  SchedulerConfig cfg;
  try {
    cfg = scheduler_config_from_json(Json::parse(r.string()));
  } catch (const Json::exception& e) {
    r.fail(std::string("bad config: ") + e.what());
  }
  TtaScheduler s(pretrained, cfg);
  s.restore_gradual(r.string());
  s.gradual_adam_.lr = cfg.lr_gradual;
  s.gradual_adam_.step = r.pod<std::int64_t>();
  if (r.pod<std::uint64_t>() != static_cast<std::uint64_t>(s.gradual_adam_.m.size()))
    r.fail("optimizer state size mismatch");
  for (Eigen::Index k = 0; k < s.gradual_adam_.m.size(); ++k) s.gradual_adam_.m[k] = r.pod<double>();
  for (Eigen::Index k = 0; k < s.gradual_adam_.v.size(); ++k) s.gradual_adam_.v[k] = r.pod<double>();
  // The buffer is not persisted, so the next step behaves like a sequence start.
  if (last >= 0) s.last_step_ = last;
  return s;
}

std::unique_ptr<SscModel> load_model(std::istream& is) {
  char magic[8] = {};
  is.read(magic, sizeof(magic));
  if (is.gcount() != static_cast<std::streamsize>(sizeof(magic))) throw FormatError("model checkpoint: truncated", is.gcount());
  is.seekg(-static_cast<std::streamoff>(sizeof(magic)), std::ios::cur);
  if (std::memcmp(magic, "LATOYMDL", 8) == 0) return std::make_unique<ToyVoxelModel>(ToyVoxelModel::load(is));
  throw FormatError("model checkpoint: unknown model type", 0);
}

std::unique_ptr<SscModel> load_model_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return load_model(is);
}

}  // namespace losadapt
