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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "priorshift/latent.h"
#include "priorshift/params.h"
#include "priorshift/rng.h"
#include "priorshift/schedule.h"

namespace priorshift {

// Sizes of the full-scale sequence Transformer this per-frame denoiser stands
// in for. Kept for anyone scaling the model up; nothing here reads them.
struct ReferenceArchitecture {
  static constexpr int kLayers = 6;
  static constexpr int kHeads = 8;
  static constexpr int kModelDim = 1024;
  static constexpr int kFeedForwardDim = 2048;
  static constexpr double kDropout = 0.1;
};

enum class Mode { kTrain, kEval };

// Sinusoidal timestep encoding, interleaved as
// (sin(t / 10000^(2i/dim)), cos(t / 10000^(2i/dim))) for i < dim / 2.
std::vector<double> time_embedding(int t, int dim);

struct DenoiserConfig {
  int dim = kDefaultLatentDim;
  int num_labels = 16;
  int num_steps = kDefaultNumSteps;
  int time_dim = 32;
  int cond_dim = 32;
  std::vector<int> hidden = {128, 128};
  double dropout = 0.1;

  void validate() const;
  bool operator==(const DenoiserConfig&) const = default;
};

// FiLM-conditioned feed-forward epsilon predictor.
//
//   e = W_time * time_embedding(t) + b_time + E[label]
//   c = silu(e)
//   per hidden layer: a = W h + b;  m = gamma(c) * a + shift(c);  h = dropout(silu(m))
//   eps_hat = W_out h + b_out
//
// gamma(c) = G c + g and shift(c) = S c + s are linear FiLM generators.
class DenoiserParams {
 public:
  struct Layer {
    std::size_t weight, bias;
    std::size_t gamma_weight, gamma_bias;
    std::size_t shift_weight, shift_bias;
    std::size_t in, out;
  };

  // Every weight zero except the FiLM scale biases, which are 1.
  static DenoiserParams zeros(const DenoiserConfig& config);
  // Scaled Gaussian weights, zero biases, FiLM generators at the identity.
  static DenoiserParams initialize(const DenoiserConfig& config, uint64_t seed);

  const DenoiserConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  std::size_t num_params() const { return params_.size(); }

  std::size_t time_weight() const { return time_weight_; }
  std::size_t time_bias() const { return time_bias_; }
  std::size_t label_embedding() const { return label_embedding_; }
  std::size_t out_weight() const { return out_weight_; }
  std::size_t out_bias() const { return out_bias_; }
  const std::vector<Layer>& layers() const { return layers_; }

  bool operator==(const DenoiserParams& o) const {
    return config_ == o.config_ && params_ == o.params_;
  }

 private:
  explicit DenoiserParams(const DenoiserConfig& config);

  DenoiserConfig config_;
  ParamSet params_;
  std::size_t time_weight_ = 0, time_bias_ = 0, label_embedding_ = 0;
  std::size_t out_weight_ = 0, out_bias_ = 0;
  std::vector<Layer> layers_;
};

// Intermediate values of one forward pass, consumed by backward().
struct DenoiserTrace {
  std::vector<double> input;
  std::vector<double> temb;
  std::vector<double> cond_pre;  // e
  std::vector<double> cond;      // c
  std::vector<std::vector<double>> pre;    // a
  std::vector<std::vector<double>> gamma;
  std::vector<std::vector<double>> mod;    // m
  std::vector<std::vector<double>> mask;   // dropout scale per unit
  std::vector<std::vector<double>> act;    // h after dropout
  std::vector<double> output;
  int label = 0;
};

// In kTrain mode with dropout > 0, `dropout_rng` must be non-null; masks use
// inverted scaling. kEval is a pure function of its arguments.
Frame forward(const DenoiserParams& params, std::span<const double> x_t, int t, int label,
              Mode mode, CounterRng* dropout_rng = nullptr);
void forward_traced(const DenoiserParams& params, std::span<const double> x_t, int t,
                    int label, Mode mode, CounterRng* dropout_rng, DenoiserTrace& trace);
// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
void backward(const DenoiserParams& params, const DenoiserTrace& trace,
              std::span<const double> output_grad, std::span<double> grad);

struct ResidualConfig {
  int dim = kDefaultLatentDim;
  std::vector<int> hidden = {32};

  void validate() const;
  bool operator==(const ResidualConfig&) const = default;
};

// Second-residual head: z_c2_hat = L [h; z_c1] + l + W_out mlp([h; z_c1]).
// The linear path makes planted linear maps exact; `hidden` may be empty.
class ResidualParams {
 public:
  struct Layer {
    std::size_t weight, bias, in, out;
  };

  static ResidualParams zeros(const ResidualConfig& config);
  static ResidualParams initialize(const ResidualConfig& config, uint64_t seed);

  const ResidualConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  std::size_t num_params() const { return params_.size(); }

  std::size_t linear_weight() const { return linear_weight_; }
  std::size_t linear_bias() const { return linear_bias_; }
  std::size_t out_weight() const { return out_weight_; }
  const std::vector<Layer>& layers() const { return layers_; }

  bool operator==(const ResidualParams& o) const {
    return config_ == o.config_ && params_ == o.params_;
  }

 private:
  explicit ResidualParams(const ResidualConfig& config);

  ResidualConfig config_;
  ParamSet params_;
  std::size_t linear_weight_ = 0, linear_bias_ = 0, out_weight_ = 0;
  std::vector<Layer> layers_;
};

struct ResidualTrace {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> act;
  std::vector<double> output;
};

// Both inputs are d-dimensional; z_c1 is treated as a constant (no gradient
// flows back through it).
Frame predict_zc2(const ResidualParams& params, std::span<const double> h,
                  std::span<const double> zc1);
void predict_zc2_traced(const ResidualParams& params, std::span<const double> h,
                        std::span<const double> zc1, ResidualTrace& trace);
void residual_backward(const ResidualParams& params, const ResidualTrace& trace,
                       std::span<const double> output_grad, std::span<double> grad);

// ---------------------------------------------------------------------------
// Losses

// One training frame in model coordinates: x0 and h standardized, zc2 the raw
// second-residual target.
struct TrainingFrame {
  Frame x0;
  int label = 0;
  Frame zc2;
  Frame h;
};

// A fully specified diffusion-loss term: no randomness left to draw.
struct DiffusionExample {
  Frame x0;
  int label = 0;
  int t = 0;
  Frame eps;
  uint64_t dropout_key = 0;
};

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // empty when gradients were not requested
};

struct TotalLossResult {
  double total = 0.0;
  double diffusion = 0.0;
  double residual = 0.0;
  std::vector<double> grad_denoiser;
  std::vector<double> grad_residual;
};

// Mean over examples and dimensions of ||eps - eps_hat||^2.
LossResult diffusion_loss(const DenoiserParams& params, std::span<const DiffusionExample> batch,
                          const Schedule& s, Mode mode, bool want_grad = true, int threads = 1);

// Draws, per element and in order: t uniform in [0, T), eps ~ N(0, I), and a
// dropout key. Shared by loss_diff and loss_total so both see the same draws.
std::vector<DiffusionExample> draw_examples(std::span<const TrainingFrame> batch,
                                            const Schedule& s, CounterRng& rng);

LossResult loss_diff(const DenoiserParams& params, std::span<const TrainingFrame> batch,
                     const Schedule& s, CounterRng& rng, Mode mode = Mode::kTrain,
                     int threads = 1);

// diffusion term + lambda * mean ||predict_zc2(h, detach(x0_hat)) - zc2||^2,
// where x0_hat is reconstructed from the same forward pass. The residual term
// contributes no gradient to the denoiser.
TotalLossResult total_loss(const DenoiserParams& denoiser, const ResidualParams& residual,
                           std::span<const DiffusionExample> examples,
                           std::span<const TrainingFrame> batch, double lambda,
                           const Schedule& s, Mode mode, bool want_grad = true, int threads = 1);

TotalLossResult loss_total(const DenoiserParams& denoiser, const ResidualParams& residual,
                           std::span<const TrainingFrame> batch, double lambda,
                           const Schedule& s, CounterRng& rng, Mode mode = Mode::kTrain,
                           int threads = 1);

}  // namespace priorshift
