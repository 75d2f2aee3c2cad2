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

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include "oracles.h"
#include "priorshift/denoiser.h"
#include "priorshift/rng.h"
#include "priorshift/sampler.h"
#include "priorshift/schedule.h"

namespace priorshift {
namespace {

DenoiserConfig small_config(double dropout = 0.0) {
  DenoiserConfig c;
  c.dim = 3;
  c.num_labels = 4;
  c.time_dim = 6;
  c.cond_dim = 5;
  c.hidden = {7, 6};
  c.dropout = dropout;
  return c;
}

void perturb(ParamSet& ps, uint64_t seed, double scale) {
  CounterRng rng(seed, StreamDomain::kGeneric, 99);
  for (auto& v : ps.values()) v += scale * rng.normal();
}

std::span<const double> block(const ParamSet& ps, const std::string& name) {
  const auto i = ps.find(name);
  if (!i) throw std::runtime_error("missing block " + name);
  return ps.view(*i);
}

// Straight-line forward pass written from the architecture description.
std::vector<double> oracle_forward(const DenoiserParams& p, const std::vector<double>& x, int t,
                                   int label) {
  const auto& c = p.config();
  const auto& ps = p.params();
  const int td = c.time_dim, cd = c.cond_dim;
  std::vector<double> temb(td);
  for (int i = 0; i < td / 2; ++i) {
    const double w = 1.0 / std::pow(10000.0, 2.0 * i / td);
    temb[2 * i] = std::sin(t * w);
    temb[2 * i + 1] = std::cos(t * w);
  }
  const auto tw = block(ps, "time_proj.weight");
  const auto tb = block(ps, "time_proj.bias");
  const auto emb = block(ps, "label_embedding");
  std::vector<double> cond(cd);
  for (int i = 0; i < cd; ++i) {
    double e = tb[i] + emb[label * cd + i];
    for (int j = 0; j < td; ++j) e += tw[i * td + j] * temb[j];
    cond[i] = oracle::silu(e);
  }
  std::vector<double> h = x;
  for (std::size_t l = 0; l < c.hidden.size(); ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    const auto W = block(ps, pre + "weight");
    const auto b = block(ps, pre + "bias");
    const auto G = block(ps, pre + "film_scale.weight");
    const auto g = block(ps, pre + "film_scale.bias");
    const auto S = block(ps, pre + "film_shift.weight");
    const auto sb = block(ps, pre + "film_shift.bias");
    const int out = c.hidden[l], in = static_cast<int>(h.size());
    std::vector<double> next(out);
    for (int j = 0; j < out; ++j) {
      double a = b[j], gam = g[j], sh = sb[j];
      for (int k = 0; k < in; ++k) a += W[j * in + k] * h[k];
      for (int k = 0; k < cd; ++k) {
        gam += G[j * cd + k] * cond[k];
        sh += S[j * cd + k] * cond[k];
      }
      next[j] = oracle::silu(gam * a + sh);
    }
    h = next;
  }
  const auto Wo = block(ps, "out.weight");
  const auto bo = block(ps, "out.bias");
  std::vector<double> y(c.dim);
  for (int i = 0; i < c.dim; ++i) {
    y[i] = bo[i];
    for (std::size_t k = 0; k < h.size(); ++k) y[i] += Wo[i * h.size() + k] * h[k];
  }
  return y;
}

std::vector<DiffusionExample> random_examples(int n, int dim, int labels, uint64_t seed) {
  CounterRng rng(seed, StreamDomain::kGeneric, 7);
  std::vector<DiffusionExample> out;
  for (int i = 0; i < n; ++i) {
    DiffusionExample ex;
    for (int j = 0; j < dim; ++j) ex.x0.push_back(rng.normal());
    for (int j = 0; j < dim; ++j) ex.eps.push_back(rng.normal());
    ex.label = static_cast<int>(rng.uniform_int(labels));
    ex.t = static_cast<int>(rng.uniform_int(100));
    ex.dropout_key = rng.next_u64();
    out.push_back(ex);
  }
  return out;
}

std::vector<TrainingFrame> matching_frames(const std::vector<DiffusionExample>& ex, uint64_t seed) {
  CounterRng rng(seed, StreamDomain::kGeneric, 8);
  std::vector<TrainingFrame> out;
  for (const auto& e : ex) {
    TrainingFrame f;
    f.x0 = e.x0;
    f.label = e.label;
    for (std::size_t j = 0; j < e.x0.size(); ++j) {
      f.zc2.push_back(0.1 * rng.normal());
      f.h.push_back(e.x0[j] + 0.05 * rng.normal());
    }
    out.push_back(f);
  }
  return out;
}

TEST(TimeEmbedding, Values) {
  const auto e0 = time_embedding(0, 4);
  EXPECT_EQ(e0, (std::vector<double>{0.0, 1.0, 0.0, 1.0}));
  const auto e = time_embedding(5, 4);
  EXPECT_NEAR(e[0], std::sin(5.0), 1e-15);
  EXPECT_NEAR(e[1], std::cos(5.0), 1e-15);
  EXPECT_NEAR(e[2], std::sin(0.05), 1e-15);
  EXPECT_NEAR(e[3], std::cos(0.05), 1e-15);
  for (int i = 0; i < 16; ++i) {
    const auto v = time_embedding(73, 32);
    EXPECT_NEAR(v[2 * i] * v[2 * i] + v[2 * i + 1] * v[2 * i + 1], 1.0, 1e-15);
  }
  EXPECT_THROW(time_embedding(1, 3), std::invalid_argument);
  EXPECT_THROW(time_embedding(-1, 4), std::invalid_argument);
}

TEST(Denoiser, ZeroWeightsGiveZeroOutput) {
  const auto p = DenoiserParams::zeros(small_config());
  for (int t : {0, 50, 99}) {
    EXPECT_EQ(forward(p, Frame{1.0, -2.0, 3.0}, t, 2, Mode::kEval), (Frame{0.0, 0.0, 0.0}));
  }
}

TEST(Denoiser, MatchesStraightLineOracle) {
  auto p = DenoiserParams::initialize(small_config(), 3);
  perturb(p.params(), 4, 0.2);
  CounterRng rng(5, StreamDomain::kGeneric, 0);
  for (int k = 0; k < 50; ++k) {
    const std::vector<double> x{rng.normal(), rng.normal(), rng.normal()};
    const int t = static_cast<int>(rng.uniform_int(100));
    const int label = static_cast<int>(rng.uniform_int(4));
    const auto got = forward(p, x, t, label, Mode::kEval);
    const auto want = oracle_forward(p, x, t, label);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Denoiser, FilmStartsAtIdentity) {
  const auto p = DenoiserParams::initialize(small_config(), 9);
  for (const auto& L : p.layers()) {
    for (double v : p.params().view(L.gamma_weight)) EXPECT_EQ(v, 0.0);
    for (double v : p.params().view(L.gamma_bias)) EXPECT_EQ(v, 1.0);
    for (double v : p.params().view(L.shift_weight)) EXPECT_EQ(v, 0.0);
    for (double v : p.params().view(L.shift_bias)) EXPECT_EQ(v, 0.0);
  }
  // With identity FiLM the label cannot affect the output.
  const Frame x{0.3, 0.1, -0.7};
  EXPECT_EQ(forward(p, x, 10, 0, Mode::kEval), forward(p, x, 10, 3, Mode::kEval));
}

TEST(Denoiser, EvalIsPureAndIgnoresDropout) {
  auto p = DenoiserParams::initialize(small_config(0.5), 3);
  perturb(p.params(), 4, 0.2);
  const Frame x{0.3, 0.1, -0.7};
  const auto a = forward(p, x, 42, 1, Mode::kEval);
  EXPECT_EQ(a, forward(p, x, 42, 1, Mode::kEval));
  CounterRng rng(1, StreamDomain::kDropout, 0);
  EXPECT_EQ(a, forward(p, x, 42, 1, Mode::kEval, &rng));
}

TEST(Denoiser, InvertedDropoutMasks) {
  auto cfg = small_config(0.25);
  cfg.hidden = {400};
  const auto p = DenoiserParams::initialize(cfg, 3);
  CounterRng rng(2, StreamDomain::kDropout, 0);
  DenoiserTrace tr;
  forward_traced(p, Frame{0.1, 0.2, 0.3}, 5, 0, Mode::kTrain, &rng, tr);
  int dropped = 0;
  for (double m : tr.mask[0]) {
    EXPECT_TRUE(m == 0.0 || m == 1.0 / 0.75);
    dropped += m == 0.0;
  }
  EXPECT_NEAR(dropped / 400.0, 0.25, 0.07);
  EXPECT_THROW(forward(p, Frame{0.1, 0.2, 0.3}, 5, 0, Mode::kTrain), std::invalid_argument);
}

TEST(Denoiser, RejectsBadInputs) {
  const auto p = DenoiserParams::zeros(small_config());
  EXPECT_THROW(forward(p, Frame{1.0, 2.0}, 0, 0, Mode::kEval), std::invalid_argument);
  EXPECT_THROW(forward(p, Frame{1.0, 2.0, 3.0}, 0, 4, Mode::kEval), std::out_of_range);
  EXPECT_THROW(forward(p, Frame{1.0, 2.0, 3.0}, 100, 0, Mode::kEval), std::out_of_range);
  auto bad = small_config();
  bad.hidden = {};
  EXPECT_THROW(DenoiserParams::zeros(bad), std::invalid_argument);
  bad = small_config(1.0);
  EXPECT_THROW(DenoiserParams::zeros(bad), std::invalid_argument);
}

TEST(Denoiser, GradientMatchesFiniteDifference) {
  const auto s = Schedule::default_linear();
  auto p = DenoiserParams::initialize(small_config(0.3), 11);
  perturb(p.params(), 12, 0.1);
  const auto ex = random_examples(6, 3, 4, 13);
  const auto r = diffusion_loss(p, ex, s, Mode::kTrain);
  auto& v = p.params().values();
  double worst = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double old = v[k], h = 1e-6;
    v[k] = old + h;
    const double up = diffusion_loss(p, ex, s, Mode::kTrain, false).loss;
    v[k] = old - h;
    const double dn = diffusion_loss(p, ex, s, Mode::kTrain, false).loss;
    v[k] = old;
    const double fd = (up - dn) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - r.grad[k]) / std::max(1e-6, std::abs(fd) + std::abs(r.grad[k])));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Residual, GradientMatchesFiniteDifference) {
  const auto s = Schedule::default_linear();
  const auto d = DenoiserParams::initialize(small_config(), 11);
  auto r = ResidualParams::initialize(ResidualConfig{3, {5, 4}}, 21);
  perturb(r.params(), 22, 0.1);
  const auto ex = random_examples(6, 3, 4, 23);
  const auto fr = matching_frames(ex, 24);
  const auto base = total_loss(d, r, ex, fr, 0.5, s, Mode::kEval);
  auto& v = r.params().values();
  double worst = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double old = v[k], h = 1e-6;
    v[k] = old + h;
    const double up = total_loss(d, r, ex, fr, 0.5, s, Mode::kEval, false).total;
    v[k] = old - h;
    const double dn = total_loss(d, r, ex, fr, 0.5, s, Mode::kEval, false).total;
    v[k] = old;
    const double fd = (up - dn) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - base.grad_residual[k]) /
                                std::max(1e-6, std::abs(fd) + std::abs(base.grad_residual[k])));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Loss, ZeroPredictorHasUnitLoss) {
  const auto s = Schedule::default_linear();
  const auto p = DenoiserParams::zeros(small_config());
  const auto ex = random_examples(4000, 3, 4, 31);
  EXPECT_NEAR(diffusion_loss(p, ex, s, Mode::kEval, false).loss, 1.0, 0.05);
}

TEST(Loss, TotalDecomposes) {
  const auto s = Schedule::default_linear();
  auto d = DenoiserParams::initialize(small_config(0.2), 41);
  const auto r = ResidualParams::initialize(ResidualConfig{3, {5}}, 42);
  const auto ex = random_examples(20, 3, 4, 43);
  const auto fr = matching_frames(ex, 44);
  const auto diff = diffusion_loss(d, ex, s, Mode::kTrain);
  const auto zero = total_loss(d, r, ex, fr, 0.0, s, Mode::kTrain);
  EXPECT_EQ(zero.total, diff.loss);
  EXPECT_EQ(zero.grad_denoiser, diff.grad);
  const auto half = total_loss(d, r, ex, fr, 0.5, s, Mode::kTrain);
  EXPECT_NEAR(half.total, half.diffusion + 0.5 * half.residual, 1e-12);
  EXPECT_EQ(half.diffusion, diff.loss);
  EXPECT_GT(half.residual, 0.0);
  EXPECT_THROW(total_loss(d, r, ex, fr, -1.0, s, Mode::kTrain), std::invalid_argument);
}

TEST(Loss, ResidualTermDoesNotReachDenoiser) {
  const auto s = Schedule::default_linear();
  const auto d = DenoiserParams::initialize(small_config(0.2), 51);
  const auto r = ResidualParams::initialize(ResidualConfig{3, {5}}, 52);
  const auto ex = random_examples(16, 3, 4, 53);
  auto fr = matching_frames(ex, 54);
  const auto a = total_loss(d, r, ex, fr, 0.5, s, Mode::kTrain);
  for (auto& f : fr) {
    for (auto& z : f.zc2) z += 3.0;
  }
  const auto b = total_loss(d, r, ex, fr, 0.5, s, Mode::kTrain);
  EXPECT_EQ(a.grad_denoiser, b.grad_denoiser);
  EXPECT_NE(a.grad_residual, b.grad_residual);
  EXPECT_NE(a.residual, b.residual);
}

TEST(Loss, ThreadCountDoesNotChangeBits) {
  const auto s = Schedule::default_linear();
  const auto d = DenoiserParams::initialize(small_config(0.2), 61);
  const auto r = ResidualParams::initialize(ResidualConfig{3, {5}}, 62);
  const auto ex = random_examples(77, 3, 4, 63);
  const auto fr = matching_frames(ex, 64);
  const auto a = total_loss(d, r, ex, fr, 0.5, s, Mode::kTrain, true, 1);
  for (int threads : {2, 3, 8}) {
    const auto b = total_loss(d, r, ex, fr, 0.5, s, Mode::kTrain, true, threads);
    EXPECT_EQ(a.total, b.total);
    EXPECT_EQ(a.grad_denoiser, b.grad_denoiser);
    EXPECT_EQ(a.grad_residual, b.grad_residual);
  }
}

TEST(Loss, SharedDrawsBetweenLossFunctions) {
  const auto s = Schedule::default_linear();
  const auto d = DenoiserParams::initialize(small_config(0.2), 71);
  const auto r = ResidualParams::initialize(ResidualConfig{3, {5}}, 72);
  const auto fr = matching_frames(random_examples(10, 3, 4, 73), 74);
  CounterRng a(5, StreamDomain::kTrainSample, 0), b(5, StreamDomain::kTrainSample, 0);
  EXPECT_EQ(loss_diff(d, fr, s, a).loss, loss_total(d, r, fr, 0.5, s, b).diffusion);
}

TEST(Residual, ZeroWeightsGiveZero) {
  const auto r = ResidualParams::zeros(ResidualConfig{3, {32}});
  EXPECT_EQ(predict_zc2(r, Frame{1.0, 2.0, 3.0}, Frame{-1.0, 0.5, 4.0}), (Frame{0.0, 0.0, 0.0}));
}

TEST(Residual, PlantedLinearMapIsExact) {
  auto r = ResidualParams::zeros(ResidualConfig{2, {8}});
  // z_c2 = A h + B z_c1 + b
  const double A[2][2] = {{0.5, -0.2}, {0.1, 0.3}};
  const double B[2][2] = {{-0.4, 0.0}, {0.2, 0.7}};
  const double b[2] = {0.05, -0.1};
  auto W = r.params().view(r.linear_weight());
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      W[i * 4 + j] = A[i][j];
      W[i * 4 + 2 + j] = B[i][j];
    }
    r.params().view(r.linear_bias())[i] = b[i];
  }
  CounterRng rng(81, StreamDomain::kGeneric, 0);
  for (int k = 0; k < 20; ++k) {
    const Frame h{rng.normal(), rng.normal()}, z{rng.normal(), rng.normal()};
    const auto got = predict_zc2(r, h, z);
    for (int i = 0; i < 2; ++i) {
      const double want = A[i][0] * h[0] + A[i][1] * h[1] + B[i][0] * z[0] + B[i][1] * z[1] + b[i];
      EXPECT_NEAR(got[i], want, 1e-15);
    }
  }
}

TEST(Residual, IdentityOnFeatureReturnsFeature) {
  auto r = ResidualParams::zeros(ResidualConfig{3, {}});
  auto W = r.params().view(r.linear_weight());
  for (int i = 0; i < 3; ++i) W[i * 6 + i] = 1.0;
  const Frame h{0.25, -1.5, 2.0};
  EXPECT_EQ(predict_zc2(r, h, Frame{9.0, 9.0, 9.0}), h);
  EXPECT_THROW(predict_zc2(r, Frame{1.0}, h), std::invalid_argument);
}

}  // namespace
}  // namespace priorshift
