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

#include <benchmark/benchmark.h>

#include "priorshift/harness.h"
#include "priorshift/sampler.h"
#include "priorshift/train.h"

namespace {

using namespace priorshift;

const World& world() {
  static const World w = [] {
    WorldSpec ws;
    ws.seed = 7;
    return gen_world(ws);
  }();
  return w;
}

void BM_ExactEps(benchmark::State& state) {
  const auto s = Schedule::default_linear();
  const auto prior = world().native.standardized(world().standardizer);
  CounterRng rng(1, StreamDomain::kGeneric, 0);
  Frame x(prior.dim());
  for (auto& v : x) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(exact_eps(prior, 3, 50, x, s));
}
BENCHMARK(BM_ExactEps);

DenoiserParams default_denoiser() {
  DenoiserConfig c;
  c.dim = 8;
  c.num_labels = 16;
  return DenoiserParams::initialize(c, 1);
}

void BM_DenoiserForward(benchmark::State& state) {
  const auto den = default_denoiser();
  const Frame x(8, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(forward(den, x, 50, 2, Mode::kEval));
}
BENCHMARK(BM_DenoiserForward);

void BM_DenoiseFrame(benchmark::State& state) {
  const auto s = Schedule::default_linear();
  const auto den = default_denoiser();
  const ModelEps eps(den);
  const Frame x(8, 0.3);
  const int t_start = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(denoise_frame(x, t_start, 2, eps, s));
}
BENCHMARK(BM_DenoiseFrame)->Arg(25)->Arg(100);

void BM_TrainStep(benchmark::State& state) {
  const auto s = Schedule::default_linear();
  const auto data = gen_dataset(world(), Source::kNative, 2, 32, 1);
  const auto frames = make_training_frames(data.sequences, world().standardizer);
  const auto den = default_denoiser();
  const auto res = ResidualParams::initialize(ResidualConfig{8, {64}}, 2);
  uint64_t step = 0;
  for (auto _ : state) {
    CounterRng rng(1, StreamDomain::kTrainSample, step++);
    benchmark::DoNotOptimize(loss_total(den, res, frames, 0.5, s, rng, Mode::kTrain, 1));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(frames.size()));
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();
