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

#include "priorshift/sampler.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "priorshift/denoiser.h"
#include "priorshift/parallel.h"
#include "priorshift/rng.h"

namespace priorshift {
namespace {

void check_step(int t, const Schedule& s) {
  if (t < 0 || t >= s.num_steps()) {
    throw std::out_of_range("timestep " + std::to_string(t) + " outside [0, " +
                            std::to_string(s.num_steps() - 1) + "]");
  }
}

void check_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("frame dimension mismatch");
}

void check_t_start(int t_start, const Schedule& s) {
  if (t_start < 0 || t_start > s.num_steps()) {
    throw std::out_of_range("t_start " + std::to_string(t_start) + " outside [0, " +
                            std::to_string(s.num_steps()) + "]");
  }
}

}  // namespace

Frame forward_corrupt(std::span<const double> x0, int t, std::span<const double> eps,
                      const Schedule& s) {
  check_step(t, s);
  check_same_size(x0.size(), eps.size());
  const double ab = s.alpha_bar(t);
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);
  Frame out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = signal * x0[i] + noise * eps[i];
  return out;
}

Frame reconstruct_x0(std::span<const double> x_t, int t, std::span<const double> eps_hat,
                     const Schedule& s) {
  check_step(t, s);
  check_same_size(x_t.size(), eps_hat.size());
  const double ab = s.alpha_bar(t);
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);
  Frame out(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i) out[i] = (x_t[i] - noise * eps_hat[i]) / signal;
  return out;
}

Frame ddim_update(std::span<const double> x_t, std::span<const double> eps_hat,
                  double alpha_bar, double alpha_bar_prev) {
  check_same_size(x_t.size(), eps_hat.size());
  if (!(alpha_bar > 0.0 && alpha_bar <= 1.0) || !(alpha_bar_prev > 0.0 && alpha_bar_prev <= 1.0)) {
    throw std::invalid_argument("ddim_update: alpha_bar values must lie in (0, 1]");
  }
  const double signal = std::sqrt(alpha_bar);
  const double noise = std::sqrt(1.0 - alpha_bar);
  const double signal_prev = std::sqrt(alpha_bar_prev);
  const double noise_prev = std::sqrt(1.0 - alpha_bar_prev);
  Frame out(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    const double x0_hat = (x_t[i] - noise * eps_hat[i]) / signal;
    out[i] = signal_prev * x0_hat + noise_prev * eps_hat[i];
  }
  return out;
}

Frame ddim_step(std::span<const double> x_t, int t, std::span<const double> eps_hat,
                const Schedule& s) {
  check_step(t, s);
  return ddim_update(x_t, eps_hat, s.alpha_bar(t), s.alpha_bar(t - 1));
}

Frame ExactEps::predict(std::span<const double> x_t, int t, int label) const {
  return exact_eps(prior_, label, t, x_t, schedule_);
}

int ModelEps::dim() const { return params_.config().dim; }

Frame ModelEps::predict(std::span<const double> x_t, int t, int label) const {
  return forward(params_, x_t, t, label, Mode::kEval);
}

Frame denoise_frame(std::span<const double> x, int t_start, int label, const EpsSource& eps,
                    const Schedule& s) {
  check_t_start(t_start, s);
  check_same_size(x.size(), static_cast<std::size_t>(eps.dim()));
  Frame cur(x.begin(), x.end());
  for (int t = t_start - 1; t >= 0; --t) {
    const Frame e = eps.predict(cur, t, label);
    cur = ddim_step(cur, t, e, s);
  }
  return cur;
}

std::vector<Frame> denoise_from(std::span<const Frame> x_corrupt, int t_start,
                                std::span<const int> labels, const EpsSource& eps,
                                const Schedule& s, int threads) {
  check_t_start(t_start, s);
  if (labels.size() != x_corrupt.size()) {
    throw std::invalid_argument("denoise_from: labels and frames differ in length");
  }
  std::vector<Frame> out(x_corrupt.size());
  parallel_for(x_corrupt.size(), threads, [&](std::size_t i) {
    out[i] = denoise_frame(x_corrupt[i], t_start, labels[i], eps, s);
  });
  return out;
}

Frame corruption_noise(uint64_t seed, uint64_t frame_index, int dim) {
  CounterRng rng(seed, StreamDomain::kCorruption, frame_index);
  Frame eps(static_cast<std::size_t>(dim));
  for (auto& e : eps) e = rng.normal();
  return eps;
}

LatentSequence convert_with_noise(const LatentSequence& seq, const ConversionContext& ctx,
                                  const SamplerConfig& cfg, std::span<const Frame> noise) {
  if (ctx.schedule == nullptr || ctx.standardizer == nullptr) {
    throw std::invalid_argument("convert: schedule and standardizer are required");
  }
  const Schedule& s = *ctx.schedule;
  check_t_start(cfg.t_start, s);
  seq.validate();
  const int d = seq.dim();
  if (ctx.standardizer->dim() != d) {
    throw std::invalid_argument("convert: standardizer dimension does not match sequence");
  }
  if (cfg.t_start > 0) {
    if (ctx.eps == nullptr) throw std::invalid_argument("convert: no epsilon source");
    if (ctx.eps->dim() != d) throw std::invalid_argument("convert: model dimension mismatch");
  }
  if (cfg.predict_residual) {
    if (ctx.residual == nullptr) {
      throw std::invalid_argument("convert: residual prediction requested but no residual model");
    }
    if (!seq.has_h()) {
      throw std::invalid_argument("convert: residual prediction needs h features in the input");
    }
  }
  if (cfg.snap) {
    if (ctx.codebook == nullptr) {
      throw std::invalid_argument("convert: snapping requested but no codebook");
    }
    if (ctx.codebook->dim() != d) throw std::invalid_argument("convert: codebook dimension mismatch");
  }
  if (noise.size() != seq.size()) throw std::invalid_argument("convert: noise length mismatch");

  const Standardizer& st = *ctx.standardizer;
  LatentSequence out;
  out.id = seq.id;
  out.labels = seq.labels;
  out.h = seq.h;
  out.frames.resize(seq.size());
  if (cfg.predict_residual) out.zc2.resize(seq.size());

  parallel_for(seq.size(), cfg.threads, [&](std::size_t i) {
    Frame z = st.standardize(seq.frames[i]);
    if (cfg.t_start > 0) {
      const Frame x_t = forward_corrupt(z, cfg.t_start - 1, noise[i], s);
      z = denoise_frame(x_t, cfg.t_start, seq.labels[i], *ctx.eps, s);
    }
    Frame zc2(static_cast<std::size_t>(d), 0.0);
    if (cfg.predict_residual) {
      zc2 = predict_zc2(*ctx.residual, st.standardize(seq.h[i]), z);
      out.zc2[i] = zc2;
    }
    Frame zc1 = st.destandardize(z);
    if (cfg.snap) zc1 = snap_to_codebook(zc1, *ctx.codebook).entry;
    for (std::size_t j = 0; j < zc1.size(); ++j) zc1[j] += zc2[j];
    out.frames[i] = std::move(zc1);
  });
  return out;
}

LatentSequence convert(const LatentSequence& seq, const ConversionContext& ctx,
                       const SamplerConfig& cfg, uint64_t first_frame_index) {
  std::vector<Frame> noise(seq.size());
  const int d = seq.dim();
  for (std::size_t i = 0; i < seq.size(); ++i) {
    noise[i] = corruption_noise(cfg.seed, first_frame_index + i, d);
  }
  return convert_with_noise(seq, ctx, cfg, noise);
}

}  // namespace priorshift
