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

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "priorshift/denoiser.h"
#include "priorshift/latent.h"
#include "priorshift/prior.h"
#include "priorshift/schedule.h"

namespace priorshift {

struct TrainConfig {
  double learning_rate = 5e-5;
  int batch_size = 64;
  int epochs = 360;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double residual_weight = 0.5;  // lambda
  uint64_t seed = 0;
  std::vector<int> hidden = {128, 128};
  int time_dim = 32;
  int cond_dim = 32;
  std::vector<int> residual_hidden = {32};
  double dropout = 0.1;
  int threads = 1;

  void validate() const;
  DenoiserConfig denoiser_config(int dim, int num_labels, int num_steps) const;
  ResidualConfig residual_config(int dim) const;
};

class Adam {
 public:
  Adam(std::size_t size, double learning_rate, double beta1, double beta2, double epsilon);
  void step(std::span<double> params, std::span<const double> grad);
  long steps() const { return steps_; }

 private:
  double lr_, beta1_, beta2_, epsilon_;
  long steps_ = 0;
  std::vector<double> m_, v_;
};

struct TrainResult {
  DenoiserParams denoiser;
  ResidualParams residual;
  Standardizer standardizer;
  std::vector<double> epoch_loss;  // mean total loss per epoch
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

// Model-coordinate training frames. Every sequence must carry zc2 and h.
std::vector<TrainingFrame> make_training_frames(std::span<const LatentSequence> dataset,
                                                const Standardizer& standardizer);

// Shuffled minibatch Adam on loss_total. Bit-reproducible for a fixed seed and
// independent of cfg.threads. Throws std::runtime_error on a non-finite loss.
TrainResult train_frames(const TrainConfig& cfg, std::span<const TrainingFrame> frames,
                         const Schedule& s, DenoiserParams denoiser, ResidualParams residual,
                         Standardizer standardizer, const EpochCallback& on_epoch = {});

// Fits the standardizer on the dataset, initialises from cfg.seed and trains.
TrainResult train(const TrainConfig& cfg, std::span<const LatentSequence> dataset,
                  int num_labels, const Schedule& s, const EpochCallback& on_epoch = {});

// Fixed (x0, t, eps) triples for evaluation: `per_frame` draws per frame.
std::vector<DiffusionExample> make_heldout_examples(std::span<const TrainingFrame> frames,
                                                    const Schedule& s, uint64_t seed,
                                                    int per_frame = 1);

// Diffusion loss of the analytic epsilon predictor on fixed examples.
double exact_oracle_loss(const ConditionalGMM& model_space_prior,
                         std::span<const DiffusionExample> examples, const Schedule& s);

}  // namespace priorshift
