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

#include "priorshift/denoiser.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "priorshift/parallel.h"
#include "priorshift/sampler.h"

namespace priorshift {
namespace {

// Examples per gradient accumulation chunk. Fixed so that the reduction
// order, and therefore every bit of the result, is independent of threads.
constexpr std::size_t kChunk = 8;

void fill_gaussian(std::span<double> v, double stddev, CounterRng& rng) {
  for (auto& x : v) x = stddev * rng.normal();
}

}  // namespace

std::vector<double> time_embedding(int t, int dim) {
  if (dim <= 0 || dim % 2 != 0) {
    throw std::invalid_argument("time_embedding: dim must be positive and even, got " +
                                std::to_string(dim));
  }
  if (t < 0) throw std::invalid_argument("time_embedding: negative timestep");
  std::vector<double> out(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim / 2; ++i) {
    const double freq = std::pow(10000.0, -2.0 * i / dim);
    const double arg = t * freq;
    out[static_cast<std::size_t>(2 * i)] = std::sin(arg);
    out[static_cast<std::size_t>(2 * i + 1)] = std::cos(arg);
  }
  return out;
}

void DenoiserConfig::validate() const {
  if (dim <= 0) throw std::invalid_argument("denoiser: dim must be positive");
  if (num_labels <= 0) throw std::invalid_argument("denoiser: num_labels must be positive");
  if (num_steps < 1) throw std::invalid_argument("denoiser: num_steps must be positive");
  if (time_dim <= 0 || time_dim % 2 != 0) {
    throw std::invalid_argument("denoiser: time_dim must be positive and even");
  }
  if (cond_dim <= 0) throw std::invalid_argument("denoiser: cond_dim must be positive");
  if (hidden.empty()) throw std::invalid_argument("denoiser: needs at least one hidden layer");
  for (int h : hidden) {
    if (h <= 0) throw std::invalid_argument("denoiser: hidden sizes must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw std::invalid_argument("denoiser: dropout must lie in [0, 1)");
  }
}

DenoiserParams::DenoiserParams(const DenoiserConfig& config) : config_(config) {
  config_.validate();
  const auto d = static_cast<std::size_t>(config_.dim);
  const auto cond = static_cast<std::size_t>(config_.cond_dim);
  time_weight_ = params_.add("time_proj.weight", cond, static_cast<std::size_t>(config_.time_dim));
  time_bias_ = params_.add("time_proj.bias", cond, 1);
  label_embedding_ =
      params_.add("label_embedding", static_cast<std::size_t>(config_.num_labels), cond);
  std::size_t in = d;
  for (std::size_t l = 0; l < config_.hidden.size(); ++l) {
    const auto out = static_cast<std::size_t>(config_.hidden[l]);
    const std::string p = "layer" + std::to_string(l) + ".";
    Layer layer{};
    layer.weight = params_.add(p + "weight", out, in);
    layer.bias = params_.add(p + "bias", out, 1);
    layer.gamma_weight = params_.add(p + "film_scale.weight", out, cond);
    layer.gamma_bias = params_.add(p + "film_scale.bias", out, 1);
    layer.shift_weight = params_.add(p + "film_shift.weight", out, cond);
    layer.shift_bias = params_.add(p + "film_shift.bias", out, 1);
    layer.in = in;
    layer.out = out;
    layers_.push_back(layer);
    in = out;
  }
  out_weight_ = params_.add("out.weight", d, in);
  out_bias_ = params_.add("out.bias", d, 1);
}

DenoiserParams DenoiserParams::zeros(const DenoiserConfig& config) {
  DenoiserParams p(config);
  for (const auto& layer : p.layers_) {
    for (auto& g : p.params_.view(layer.gamma_bias)) g = 1.0;
  }
  return p;
}

DenoiserParams DenoiserParams::initialize(const DenoiserConfig& config, uint64_t seed) {
  DenoiserParams p = zeros(config);
  CounterRng rng(seed, StreamDomain::kTrainInit, 0);
  fill_gaussian(p.params_.view(p.time_weight_), 1.0 / std::sqrt(config.time_dim), rng);
  fill_gaussian(p.params_.view(p.label_embedding_), 1.0, rng);
  for (const auto& layer : p.layers_) {
    fill_gaussian(p.params_.view(layer.weight), std::sqrt(2.0 / static_cast<double>(layer.in)),
                  rng);
  }
  const double last = static_cast<double>(p.layers_.back().out);
  fill_gaussian(p.params_.view(p.out_weight_), 0.1 / std::sqrt(last), rng);
  return p;
}

void forward_traced(const DenoiserParams& params, std::span<const double> x_t, int t, int label,
                    Mode mode, CounterRng* dropout_rng, DenoiserTrace& trace) {
  const auto& cfg = params.config();
  const auto& ps = params.params();
  if (static_cast<int>(x_t.size()) != cfg.dim) {
    throw std::invalid_argument("denoiser: input dimension " + std::to_string(x_t.size()) +
                                " != " + std::to_string(cfg.dim));
  }
  if (label < 0 || label >= cfg.num_labels) {
    throw std::out_of_range("denoiser: unknown label " + std::to_string(label));
  }
  if (t < 0 || t >= cfg.num_steps) {
    throw std::out_of_range("denoiser: timestep " + std::to_string(t) + " out of range");
  }
  const bool drop = mode == Mode::kTrain && cfg.dropout > 0.0;
  if (drop && dropout_rng == nullptr) {
    throw std::invalid_argument("denoiser: train-mode dropout needs a generator");
  }

  const auto cond = static_cast<std::size_t>(cfg.cond_dim);
  trace.label = label;
  trace.input.assign(x_t.begin(), x_t.end());
  trace.temb = time_embedding(t, cfg.time_dim);

  trace.cond_pre.assign(ps.data(params.time_bias()), ps.data(params.time_bias()) + cond);
  matvec_add(ps.data(params.time_weight()), cond, trace.temb.size(), trace.temb.data(),
             trace.cond_pre.data());
  const double* emb = ps.data(params.label_embedding()) + static_cast<std::size_t>(label) * cond;
  for (std::size_t i = 0; i < cond; ++i) trace.cond_pre[i] += emb[i];
  trace.cond.resize(cond);
  for (std::size_t i = 0; i < cond; ++i) trace.cond[i] = silu(trace.cond_pre[i]);

  const auto& layers = params.layers();
  trace.pre.resize(layers.size());
  trace.gamma.resize(layers.size());
  trace.mod.resize(layers.size());
  trace.mask.resize(layers.size());
  trace.act.resize(layers.size());
  const double keep_scale = drop ? 1.0 / (1.0 - cfg.dropout) : 1.0;

  const std::vector<double>* h = &trace.input;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    auto& a = trace.pre[l];
    auto& gamma = trace.gamma[l];
    auto& m = trace.mod[l];
    auto& mask = trace.mask[l];
    auto& act = trace.act[l];

    a.assign(ps.data(L.bias), ps.data(L.bias) + L.out);
    matvec_add(ps.data(L.weight), L.out, L.in, h->data(), a.data());
    gamma.assign(ps.data(L.gamma_bias), ps.data(L.gamma_bias) + L.out);
    matvec_add(ps.data(L.gamma_weight), L.out, cond, trace.cond.data(), gamma.data());
    m.assign(ps.data(L.shift_bias), ps.data(L.shift_bias) + L.out);
    matvec_add(ps.data(L.shift_weight), L.out, cond, trace.cond.data(), m.data());
    mask.assign(L.out, 1.0);
    act.resize(L.out);
    for (std::size_t j = 0; j < L.out; ++j) {
      m[j] += gamma[j] * a[j];
      if (drop) mask[j] = dropout_rng->uniform() < cfg.dropout ? 0.0 : keep_scale;
      act[j] = silu(m[j]) * mask[j];
    }
    h = &act;
  }

  const auto d = static_cast<std::size_t>(cfg.dim);
  trace.output.assign(ps.data(params.out_bias()), ps.data(params.out_bias()) + d);
  matvec_add(ps.data(params.out_weight()), d, h->size(), h->data(), trace.output.data());
}

Frame forward(const DenoiserParams& params, std::span<const double> x_t, int t, int label,
              Mode mode, CounterRng* dropout_rng) {
  DenoiserTrace trace;
  forward_traced(params, x_t, t, label, mode, dropout_rng, trace);
  return std::move(trace.output);
}

void backward(const DenoiserParams& params, const DenoiserTrace& trace,
              std::span<const double> output_grad, std::span<double> grad) {
  const auto& cfg = params.config();
  const auto& ps = params.params();
  if (grad.size() != ps.size()) throw std::invalid_argument("backward: gradient size mismatch");
  auto g = [&](std::size_t block) { return grad.data() + ps.block(block).offset; };

  const auto d = static_cast<std::size_t>(cfg.dim);
  const auto cond = static_cast<std::size_t>(cfg.cond_dim);
  const auto& layers = params.layers();
  const auto& last = trace.act.back();

  outer_add(d, last.size(), output_grad.data(), last.data(), g(params.out_weight()));
  for (std::size_t i = 0; i < d; ++i) g(params.out_bias())[i] += output_grad[i];
  std::vector<double> dh(last.size(), 0.0);
  matvec_transpose_add(ps.data(params.out_weight()), d, last.size(), output_grad.data(),
                       dh.data());

  std::vector<double> dc(cond, 0.0);
  std::vector<double> dm, dgamma, da;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& L = layers[li];
    const auto& h_prev = li == 0 ? trace.input : trace.act[li - 1];
    dm.resize(L.out);
    dgamma.resize(L.out);
    da.resize(L.out);
    for (std::size_t j = 0; j < L.out; ++j) {
      dm[j] = dh[j] * trace.mask[li][j] * silu_grad(trace.mod[li][j]);
      dgamma[j] = dm[j] * trace.pre[li][j];
      da[j] = dm[j] * trace.gamma[li][j];
    }
    outer_add(L.out, cond, dgamma.data(), trace.cond.data(), g(L.gamma_weight));
    outer_add(L.out, cond, dm.data(), trace.cond.data(), g(L.shift_weight));
    for (std::size_t j = 0; j < L.out; ++j) {
      g(L.gamma_bias)[j] += dgamma[j];
      g(L.shift_bias)[j] += dm[j];
      g(L.bias)[j] += da[j];
    }
    matvec_transpose_add(ps.data(L.gamma_weight), L.out, cond, dgamma.data(), dc.data());
    matvec_transpose_add(ps.data(L.shift_weight), L.out, cond, dm.data(), dc.data());
    outer_add(L.out, L.in, da.data(), h_prev.data(), g(L.weight));
    if (li > 0) {
      dh.assign(L.in, 0.0);
      matvec_transpose_add(ps.data(L.weight), L.out, L.in, da.data(), dh.data());
    }
  }

  std::vector<double> de(cond);
  for (std::size_t i = 0; i < cond; ++i) de[i] = dc[i] * silu_grad(trace.cond_pre[i]);
  outer_add(cond, trace.temb.size(), de.data(), trace.temb.data(), g(params.time_weight()));
  double* demb = g(params.label_embedding()) + static_cast<std::size_t>(trace.label) * cond;
  for (std::size_t i = 0; i < cond; ++i) {
    g(params.time_bias())[i] += de[i];
    demb[i] += de[i];
  }
}

// ---------------------------------------------------------------------------
// Residual head

void ResidualConfig::validate() const {
  if (dim <= 0) throw std::invalid_argument("residual head: dim must be positive");
  for (int h : hidden) {
    if (h <= 0) throw std::invalid_argument("residual head: hidden sizes must be positive");
  }
}

ResidualParams::ResidualParams(const ResidualConfig& config) : config_(config) {
  config_.validate();
  const auto d = static_cast<std::size_t>(config_.dim);
  linear_weight_ = params_.add("residual.linear.weight", d, 2 * d);
  linear_bias_ = params_.add("residual.linear.bias", d, 1);
  std::size_t in = 2 * d;
  for (std::size_t l = 0; l < config_.hidden.size(); ++l) {
    const auto out = static_cast<std::size_t>(config_.hidden[l]);
    const std::string p = "residual.layer" + std::to_string(l) + ".";
    layers_.push_back({params_.add(p + "weight", out, in), params_.add(p + "bias", out, 1), in, out});
    in = out;
  }
  out_weight_ = params_.add("residual.out.weight", d, config_.hidden.empty() ? 0 : in);
}

ResidualParams ResidualParams::zeros(const ResidualConfig& config) { return ResidualParams(config); }

ResidualParams ResidualParams::initialize(const ResidualConfig& config, uint64_t seed) {
  ResidualParams p(config);
  CounterRng rng(seed, StreamDomain::kTrainInit, 1);
  for (const auto& layer : p.layers_) {
    fill_gaussian(p.params_.view(layer.weight), std::sqrt(2.0 / static_cast<double>(layer.in)),
                  rng);
  }
  if (!p.layers_.empty()) {
    fill_gaussian(p.params_.view(p.out_weight_),
                  0.1 / std::sqrt(static_cast<double>(p.layers_.back().out)), rng);
  }
  return p;
}

void predict_zc2_traced(const ResidualParams& params, std::span<const double> h,
                        std::span<const double> zc1, ResidualTrace& trace) {
  const auto& ps = params.params();
  const auto d = static_cast<std::size_t>(params.config().dim);
  if (h.size() != d || zc1.size() != d) {
    throw std::invalid_argument("predict_zc2: inputs must both be " + std::to_string(d) +
                                "-dimensional");
  }
  trace.input.resize(2 * d);
  std::copy(h.begin(), h.end(), trace.input.begin());
  std::copy(zc1.begin(), zc1.end(), trace.input.begin() + static_cast<std::ptrdiff_t>(d));

  trace.output.assign(ps.data(params.linear_bias()), ps.data(params.linear_bias()) + d);
  matvec_add(ps.data(params.linear_weight()), d, 2 * d, trace.input.data(), trace.output.data());

  const auto& layers = params.layers();
  trace.pre.resize(layers.size());
  trace.act.resize(layers.size());
  const std::vector<double>* z = &trace.input;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    trace.pre[l].assign(ps.data(L.bias), ps.data(L.bias) + L.out);
    matvec_add(ps.data(L.weight), L.out, L.in, z->data(), trace.pre[l].data());
    trace.act[l].resize(L.out);
    for (std::size_t j = 0; j < L.out; ++j) trace.act[l][j] = silu(trace.pre[l][j]);
    z = &trace.act[l];
  }
  if (!layers.empty()) {
    matvec_add(ps.data(params.out_weight()), d, z->size(), z->data(), trace.output.data());
  }
}

Frame predict_zc2(const ResidualParams& params, std::span<const double> h,
                  std::span<const double> zc1) {
  ResidualTrace trace;
  predict_zc2_traced(params, h, zc1, trace);
  return std::move(trace.output);
}

void residual_backward(const ResidualParams& params, const ResidualTrace& trace,
                       std::span<const double> output_grad, std::span<double> grad) {
  const auto& ps = params.params();
  if (grad.size() != ps.size()) {
    throw std::invalid_argument("residual_backward: gradient size mismatch");
  }
  auto g = [&](std::size_t block) { return grad.data() + ps.block(block).offset; };
  const auto d = static_cast<std::size_t>(params.config().dim);

  outer_add(d, 2 * d, output_grad.data(), trace.input.data(), g(params.linear_weight()));
  for (std::size_t i = 0; i < d; ++i) g(params.linear_bias())[i] += output_grad[i];

  const auto& layers = params.layers();
  if (layers.empty()) return;
  const auto& last = trace.act.back();
  outer_add(d, last.size(), output_grad.data(), last.data(), g(params.out_weight()));
  std::vector<double> dact(last.size(), 0.0);
  matvec_transpose_add(ps.data(params.out_weight()), d, last.size(), output_grad.data(),
                       dact.data());
  std::vector<double> dpre;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& L = layers[li];
    const auto& z_prev = li == 0 ? trace.input : trace.act[li - 1];
    dpre.resize(L.out);
    for (std::size_t j = 0; j < L.out; ++j) dpre[j] = dact[j] * silu_grad(trace.pre[li][j]);
    outer_add(L.out, L.in, dpre.data(), z_prev.data(), g(L.weight));
    for (std::size_t j = 0; j < L.out; ++j) g(L.bias)[j] += dpre[j];
    if (li > 0) {
      dact.assign(L.in, 0.0);
      matvec_transpose_add(ps.data(L.weight), L.out, L.in, dpre.data(), dact.data());
    }
  }
}

// ---------------------------------------------------------------------------
// Losses

namespace {

struct ChunkResult {
  double diffusion = 0.0;
  double residual = 0.0;
  std::vector<double> grad_denoiser;
  std::vector<double> grad_residual;
};

// Shared by diffusion_loss and total_loss so that the denoiser term and its
// gradient are computed by literally the same operations in both.
TotalLossResult accumulate_losses(const DenoiserParams& denoiser, const ResidualParams* residual,
                                  std::span<const DiffusionExample> examples,
                                  std::span<const TrainingFrame> frames, double lambda,
                                  const Schedule& s, Mode mode, bool want_grad, int threads) {
  const std::size_t n = examples.size();
  if (n == 0) throw std::invalid_argument("loss: empty batch");
  if (residual != nullptr && frames.size() != n) {
    throw std::invalid_argument("loss: examples and frames differ in length");
  }
  const auto d = static_cast<std::size_t>(denoiser.config().dim);
  const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(d));
  const std::size_t num_chunks = (n + kChunk - 1) / kChunk;
  std::vector<ChunkResult> chunks(num_chunks);

  parallel_for(num_chunks, threads, [&](std::size_t c) {
    auto& out = chunks[c];
    if (want_grad) {
      out.grad_denoiser.assign(denoiser.num_params(), 0.0);
      if (residual != nullptr) out.grad_residual.assign(residual->num_params(), 0.0);
    }
    DenoiserTrace trace;
    ResidualTrace rtrace;
    std::vector<double> dout(d), rdout(d);
    const std::size_t end = std::min(n, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      const auto& ex = examples[i];
      if (ex.x0.size() != d || ex.eps.size() != d) {
        throw std::invalid_argument("loss: example dimension mismatch");
      }
      const Frame x_t = forward_corrupt(ex.x0, ex.t, ex.eps, s);
      CounterRng drng(ex.dropout_key, StreamDomain::kDropout, 0);
      forward_traced(denoiser, x_t, ex.t, ex.label, mode, &drng, trace);
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = trace.output[j] - ex.eps[j];
        out.diffusion += diff * diff;
        dout[j] = 2.0 * diff * norm;
      }
      if (want_grad) backward(denoiser, trace, dout, out.grad_denoiser);

      if (residual != nullptr) {
        const auto& fr = frames[i];
        // x0_hat is a constant input to the residual head.
        const Frame x0_hat = reconstruct_x0(x_t, ex.t, trace.output, s);
        predict_zc2_traced(*residual, fr.h, x0_hat, rtrace);
        if (fr.zc2.size() != d) throw std::invalid_argument("loss: zc2 dimension mismatch");
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = rtrace.output[j] - fr.zc2[j];
          out.residual += diff * diff;
          rdout[j] = 2.0 * lambda * diff * norm;
        }
        if (want_grad) residual_backward(*residual, rtrace, rdout, out.grad_residual);
      }
    }
  });

  TotalLossResult result;
  if (want_grad) {
    result.grad_denoiser.assign(denoiser.num_params(), 0.0);
    if (residual != nullptr) result.grad_residual.assign(residual->num_params(), 0.0);
  }
  for (const auto& c : chunks) {
    result.diffusion += c.diffusion;
    result.residual += c.residual;
    if (want_grad) {
      for (std::size_t k = 0; k < c.grad_denoiser.size(); ++k) {
        result.grad_denoiser[k] += c.grad_denoiser[k];
      }
      for (std::size_t k = 0; k < c.grad_residual.size(); ++k) {
        result.grad_residual[k] += c.grad_residual[k];
      }
    }
  }
  result.diffusion *= norm;
  result.residual *= norm;
  result.total = result.diffusion + lambda * result.residual;
  return result;
}

}  // namespace

LossResult diffusion_loss(const DenoiserParams& params, std::span<const DiffusionExample> batch,
                          const Schedule& s, Mode mode, bool want_grad, int threads) {
  auto r = accumulate_losses(params, nullptr, batch, {}, 0.0, s, mode, want_grad, threads);
  return {r.diffusion, std::move(r.grad_denoiser)};
}

std::vector<DiffusionExample> draw_examples(std::span<const TrainingFrame> batch,
                                            const Schedule& s, CounterRng& rng) {
  std::vector<DiffusionExample> out;
  out.reserve(batch.size());
  for (const auto& fr : batch) {
    DiffusionExample ex;
    ex.x0 = fr.x0;
    ex.label = fr.label;
    ex.t = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(s.num_steps())));
    ex.eps.resize(fr.x0.size());
    for (auto& e : ex.eps) e = rng.normal();
    ex.dropout_key = rng.next_u64();
    out.push_back(std::move(ex));
  }
  return out;
}

LossResult loss_diff(const DenoiserParams& params, std::span<const TrainingFrame> batch,
                     const Schedule& s, CounterRng& rng, Mode mode, int threads) {
  if (batch.empty()) throw std::invalid_argument("loss_diff: empty batch");
  const auto examples = draw_examples(batch, s, rng);
  return diffusion_loss(params, examples, s, mode, true, threads);
}

TotalLossResult total_loss(const DenoiserParams& denoiser, const ResidualParams& residual,
                           std::span<const DiffusionExample> examples,
                           std::span<const TrainingFrame> batch, double lambda,
                           const Schedule& s, Mode mode, bool want_grad, int threads) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("loss_total: lambda must be >= 0");
  if (residual.config().dim != denoiser.config().dim) {
    throw std::invalid_argument("loss_total: residual head dimension mismatch");
  }
  return accumulate_losses(denoiser, &residual, examples, batch, lambda, s, mode, want_grad,
                           threads);
}

TotalLossResult loss_total(const DenoiserParams& denoiser, const ResidualParams& residual,
                           std::span<const TrainingFrame> batch, double lambda,
                           const Schedule& s, CounterRng& rng, Mode mode, int threads) {
  if (batch.empty()) throw std::invalid_argument("loss_total: empty batch");
  const auto examples = draw_examples(batch, s, rng);
  return total_loss(denoiser, residual, examples, batch, lambda, s, mode, true, threads);
}

}  // namespace priorshift
