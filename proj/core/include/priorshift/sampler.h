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
#include <span>
#include <vector>

#include "priorshift/latent.h"
#include "priorshift/prior.h"
#include "priorshift/schedule.h"

namespace priorshift {

class DenoiserParams;
class ResidualParams;

// x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) eps.
Frame forward_corrupt(std::span<const double> x0, int t, std::span<const double> eps,
                      const Schedule& s);

// x0_hat = (x_t - sqrt(1 - ab_t) eps_hat) / sqrt(ab_t); inverts forward_corrupt.
Frame reconstruct_x0(std::span<const double> x_t, int t, std::span<const double> eps_hat,
                     const Schedule& s);

// Deterministic DDIM update in coefficient form:
// x_prev = sqrt(ab_prev) x0_hat + sqrt(1 - ab_prev) eps_hat.
Frame ddim_update(std::span<const double> x_t, std::span<const double> eps_hat,
                  double alpha_bar, double alpha_bar_prev);

// ddim_update with ab_t = alpha_bar(t) and ab_prev = alpha_bar(t - 1); at
// t = 0 the result is x0_hat exactly.
Frame ddim_step(std::span<const double> x_t, int t, std::span<const double> eps_hat,
                const Schedule& s);

// Source of epsilon predictions during denoising. Implementations are pure.
class EpsSource {
 public:
  virtual ~EpsSource() = default;
  virtual int dim() const = 0;
  virtual Frame predict(std::span<const double> x_t, int t, int label) const = 0;
};

// Bayes-optimal predictions from an analytic prior in model coordinates.
class ExactEps final : public EpsSource {
 public:
  ExactEps(const ConditionalGMM& prior, const Schedule& s) : prior_(prior), schedule_(s) {}
  int dim() const override { return prior_.dim(); }
  Frame predict(std::span<const double> x_t, int t, int label) const override;

 private:
  const ConditionalGMM& prior_;
  const Schedule& schedule_;
};

// Trained denoiser in eval mode.
class ModelEps final : public EpsSource {
 public:
  explicit ModelEps(const DenoiserParams& params) : params_(params) {}
  int dim() const override;
  Frame predict(std::span<const double> x_t, int t, int label) const override;

 private:
  const DenoiserParams& params_;
};

// Runs DDIM from timestep t_start - 1 down to 0 (t_start steps) for a single
// frame. t_start == 0 returns the input unchanged.
Frame denoise_frame(std::span<const double> x, int t_start, int label, const EpsSource& eps,
                    const Schedule& s);

// Frames are denoised independently; `threads` does not change the result.
std::vector<Frame> denoise_from(std::span<const Frame> x_corrupt, int t_start,
                                std::span<const int> labels, const EpsSource& eps,
                                const Schedule& s, int threads = 1);

struct SamplerConfig {
  int t_start = 0;  // user scale 0..T; corruption uses schedule index t_start - 1
  uint64_t seed = 0;
  bool predict_residual = true;
  bool snap = true;
  int threads = 1;
};

// Everything convert() needs besides the sequence. Pointers are optional and
// only dereferenced when the matching SamplerConfig flag is set.
struct ConversionContext {
  const Schedule* schedule = nullptr;
  const Standardizer* standardizer = nullptr;  // model coordinates of `eps`
  const EpsSource* eps = nullptr;
  const Codebook* codebook = nullptr;
  const ResidualParams* residual = nullptr;
};

// Corruption noise for the frame with global index `frame_index`.
Frame corruption_noise(uint64_t seed, uint64_t frame_index, int dim);

// Pipeline: standardize, corrupt at t_start - 1, denoise t_start steps,
// predict z_c2 from the pre-snap z_c1 (optional), destandardize, snap
// (optional), output z_c1 + z_c2. Labels, ids, h and the frame count pass
// through. `first_frame_index` is the global index of the first frame and
// addresses its corruption noise.
LatentSequence convert(const LatentSequence& seq, const ConversionContext& ctx,
                       const SamplerConfig& cfg, uint64_t first_frame_index = 0);

// As convert(), with the per-frame corruption noise supplied by the caller.
LatentSequence convert_with_noise(const LatentSequence& seq, const ConversionContext& ctx,
                                  const SamplerConfig& cfg, std::span<const Frame> noise);

}  // namespace priorshift
