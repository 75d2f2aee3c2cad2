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
#include <string>
#include <vector>

#include "priorshift/denoiser.h"
#include "priorshift/latent.h"
#include "priorshift/prior.h"
#include "priorshift/rng.h"
#include "priorshift/sampler.h"
#include "priorshift/schedule.h"

namespace priorshift {

// Generation recipe for a synthetic world. Per label, component means are the
// label centre plus a jitter; the L2 mixture shares weights and variances and
// shifts every mean of a label by `l2_shift` pooled standard deviations along
// one random unit direction.
struct WorldSpec {
  int dim = kDefaultLatentDim;
  int num_labels = 16;
  int components = 2;
  double center_scale = 1.0;
  double component_spread = 0.5;
  double sigma_min = 0.25;
  double sigma_max = 0.45;
  double weight_min = 0.3;
  double weight_max = 0.7;
  double l2_shift = 1.5;
  int codebook_size = 64;
  double h_noise = 0.05;
  int standardizer_samples = 20000;
  // Regenerate until mean native_class_prob(native) - mean(l2) reaches this.
  double min_separation = 0.2;
  int separation_samples = 4000;
  int max_attempts = 64;
  uint64_t seed = 0;

  void validate() const;
  bool operator==(const WorldSpec&) const = default;
};

struct World {
  WorldSpec spec;
  ConditionalGMM native;
  ConditionalGMM l2;
  Codebook codebook;
  Standardizer standardizer;  // fit on native samples
  double h_noise = 0.05;
  int attempts = 1;           // generations tried, including the accepted one
  double separation = 0.0;

  int dim() const { return native.dim(); }
  int num_labels() const { return native.num_labels(); }
  void validate() const;
  bool operator==(const World&) const = default;
};

World gen_world(const WorldSpec& spec);

// Mean native_class_prob of native draws minus that of L2 draws.
double class_separation(const ConditionalGMM& native, const ConditionalGMM& l2,
                        std::size_t samples, CounterRng& rng);

enum class Source { kNative, kL2 };

const char* source_name(Source s);
Source parse_source(const std::string& name);

// Per frame: label uniform, content c from the chosen prior, z_c2 = c - snap(c),
// h = c + N(0, h_noise^2). `frames` carries c.
Dataset gen_dataset(const World& world, Source which, int n_seq, int seq_len, uint64_t seed);

struct FrameMetrics {
  double identity_l2 = 0.0;   // Euclidean distance in world-standardized coordinates
  double identity_cos = 0.0;  // cosine similarity in world-standardized coordinates
  double native_prob = 0.0;   // native_class_prob of the output frame
};

FrameMetrics frame_metrics(const World& world, std::span<const double> input,
                           std::span<const double> output, int label);

struct SequenceMetrics {
  std::string id;
  int t_start = 0;
  double identity_l2 = 0.0;
  double native_prob = 0.0;
};

SequenceMetrics sequence_metrics(const World& world, const LatentSequence& input,
                                 const LatentSequence& output, int t_start);

enum class Aggregation { kFrames, kStratified };

struct SweepRow {
  int t_start = 0;
  double identity_l2 = 0.0;
  double identity_cos = 0.0;
  double native_prob = 0.0;
  std::size_t n_frames = 0;
};

struct SweepTable {
  std::vector<SweepRow> rows;

  static constexpr const char* kHeader = "t_start,identity_l2,identity_cos,native_prob,n_frames";
  std::string to_csv() const;
};

struct SweepConfig {
  std::vector<int> t_starts;
  int n_seq = 50;
  int seq_len = 10;
  uint64_t seed = 0;
  bool snap = false;
  bool predict_residual = false;
  Aggregation aggregation = Aggregation::kFrames;
  int threads = 1;
};

// Model-side inputs: the epsilon source, the standardizer of its coordinates
// and the optional residual head.
struct SweepModel {
  const EpsSource* eps = nullptr;
  const Standardizer* standardizer = nullptr;
  const ResidualParams* residual = nullptr;
};

// Converts one fixed L2 evaluation set at every t_start with the same per-frame
// corruption noise, then aggregates the metrics in a fixed order.
SweepTable sweep(const World& world, const SweepModel& model, const SweepConfig& cfg,
                 const Schedule& s);

struct Fig1Data {
  std::vector<double> grid;
  std::vector<double> prior;                    // prior density on the grid
  std::vector<int> t_starts;
  std::vector<PosteriorGrid> posteriors;        // one per t_start
  std::vector<std::vector<double>> likelihoods; // normalised over x0, one per t_start
};

// For each t_start: x_t = sqrt(ab) x0_l2 with ab at index t_start - 1 and zero
// noise, and the posterior of x0 on the grid. The prior must be 1-D.
Fig1Data fig1_data(const ConditionalGMM& prior, int label, double x0_l2,
                   std::span<const int> t_starts, std::span<const double> grid,
                   const Schedule& s);

std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace priorshift
