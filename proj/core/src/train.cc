// Copyright 2026 The priorshift Authors
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

#include "priorshift/train.h"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "priorshift/sampler.h"

namespace priorshift {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw std::invalid_argument("train: Adam moment coefficients must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw std::invalid_argument("train: Adam epsilon must be > 0");
  if (!(residual_weight >= 0.0)) throw std::invalid_argument("train: lambda must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw std::invalid_argument("train: dropout must lie in [0, 1)");
  }
  if (threads < 1) throw std::invalid_argument("train: threads must be >= 1");
}

DenoiserConfig TrainConfig::denoiser_config(int dim, int num_labels, int num_steps) const {
  DenoiserConfig c;
  c.dim = dim;
  c.num_labels = num_labels;
  c.num_steps = num_steps;
  c.time_dim = time_dim;
  c.cond_dim = cond_dim;
  c.hidden = hidden;
  c.dropout = dropout;
  return c;
}

ResidualConfig TrainConfig::residual_config(int dim) const {
  ResidualConfig c;
  c.dim = dim;
  c.hidden = residual_hidden;
  return c;
}

Adam::Adam(std::size_t size, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(size, 0.0),
      v_(size, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw std::invalid_argument("adam: size mismatch");
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + epsilon_);
  }
}

std::vector<TrainingFrame> make_training_frames(std::span<const LatentSequence> dataset,
                                                const Standardizer& standardizer) {
  std::vector<TrainingFrame> frames;
  for (const auto& seq : dataset) {
    if (!seq.has_zc2() || !seq.has_h()) {
      throw std::invalid_argument("training data: sequence '" + seq.id +
                                  "' lacks zc2/h channels");
    }
    for (std::size_t i = 0; i < seq.size(); ++i) {
      frames.push_back({standardizer.standardize(seq.frames[i]), seq.labels[i], seq.zc2[i],
                        standardizer.standardize(seq.h[i])});
    }
  }
  return frames;
}

TrainResult train_frames(const TrainConfig& cfg, std::span<const TrainingFrame> frames,
                         const Schedule& s, DenoiserParams denoiser, ResidualParams residual,
                         Standardizer standardizer, const EpochCallback& on_epoch) {
  cfg.validate();
  if (frames.empty()) throw std::invalid_argument("train: empty dataset");

  Adam opt_denoiser(denoiser.num_params(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                    cfg.adam_epsilon);
  Adam opt_residual(residual.num_params(), cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                    cfg.adam_epsilon);

  std::vector<std::size_t> order(frames.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<TrainingFrame> batch;
  std::vector<double> curve;
  uint64_t step = 0;
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    CounterRng shuffle(cfg.seed, StreamDomain::kTrainShuffle, static_cast<uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle.uniform_int(i)]);
    }
    double sum = 0.0;
    int batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      const std::size_t end = std::min(order.size(), begin + batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(frames[order[i]]);

      CounterRng rng(cfg.seed, StreamDomain::kTrainSample, step++);
      auto r = loss_total(denoiser, residual, batch, cfg.residual_weight, s, rng, Mode::kTrain,
                          cfg.threads);
      if (!std::isfinite(r.total)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
      }
      opt_denoiser.step(denoiser.params().values(), r.grad_denoiser);
      opt_residual.step(residual.params().values(), r.grad_residual);
      sum += r.total;
      ++batches;
    }
    curve.push_back(sum / batches);
    if (on_epoch) on_epoch(epoch, curve.back());
  }
  return {std::move(denoiser), std::move(residual), std::move(standardizer), std::move(curve)};
}

TrainResult train(const TrainConfig& cfg, std::span<const LatentSequence> dataset,
                  int num_labels, const Schedule& s, const EpochCallback& on_epoch) {
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  for (const auto& seq : dataset) seq.validate(num_labels);
  const int dim = dataset.front().dim();
  Standardizer standardizer = fit_standardizer(dataset);
  const auto frames = make_training_frames(dataset, standardizer);
  auto denoiser =
      DenoiserParams::initialize(cfg.denoiser_config(dim, num_labels, s.num_steps()), cfg.seed);
  auto residual = ResidualParams::initialize(cfg.residual_config(dim), cfg.seed);
  return train_frames(cfg, frames, s, std::move(denoiser), std::move(residual),
                      std::move(standardizer), on_epoch);
}

std::vector<DiffusionExample> make_heldout_examples(std::span<const TrainingFrame> frames,
                                                    const Schedule& s, uint64_t seed,
                                                    int per_frame) {
  std::vector<DiffusionExample> out;
  out.reserve(frames.size() * static_cast<std::size_t>(per_frame));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    CounterRng rng(seed, StreamDomain::kHeldOut, i);
    std::span<const TrainingFrame> one(&frames[i], 1);
    for (int r = 0; r < per_frame; ++r) {
      auto ex = draw_examples(one, s, rng);
      out.push_back(std::move(ex.front()));
    }
  }
  return out;
}

double exact_oracle_loss(const ConditionalGMM& model_space_prior,
                         std::span<const DiffusionExample> examples, const Schedule& s) {
  if (examples.empty()) throw std::invalid_argument("exact_oracle_loss: no examples");
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& ex : examples) {
    const Frame x_t = forward_corrupt(ex.x0, ex.t, ex.eps, s);
    const Frame e = exact_eps(model_space_prior, ex.label, ex.t, x_t, s);
    for (std::size_t j = 0; j < e.size(); ++j) {
      const double diff = e[j] - ex.eps[j];
      acc += diff * diff;
    }
    count += e.size();
  }
  return acc / static_cast<double>(count);
}

}  // namespace priorshift
