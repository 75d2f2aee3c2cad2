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

#include "priorshift/harness.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <string>

#include "priorshift/parallel.h"
#include "priorshift/rng.h"

namespace priorshift {
namespace {

constexpr uint64_t kStreamsPerAttempt = 4;

std::string fmt17(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

std::vector<double> unit_direction(int dim, CounterRng& rng) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm < 1e-12);
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

// Native and L2 mixtures for one generation attempt.
std::pair<ConditionalGMM, ConditionalGMM> draw_priors(const WorldSpec& spec, CounterRng& rng) {
  const auto d = static_cast<std::size_t>(spec.dim);
  std::vector<std::vector<GaussianComponent>> native(static_cast<std::size_t>(spec.num_labels));
  std::vector<std::vector<GaussianComponent>> l2(native.size());
  for (std::size_t k = 0; k < native.size(); ++k) {
    std::vector<double> center(d);
    for (auto& c : center) c = spec.center_scale * rng.normal();

    std::vector<double> raw_weights(static_cast<std::size_t>(spec.components));
    double weight_sum = 0.0;
    for (auto& w : raw_weights) {
      w = spec.weight_min + (spec.weight_max - spec.weight_min) * rng.uniform();
      weight_sum += w;
    }
    double assigned = 0.0;
    double pooled_var = 0.0;
    for (std::size_t c = 0; c < raw_weights.size(); ++c) {
      GaussianComponent g;
      g.weight = c + 1 == raw_weights.size() ? 1.0 - assigned : raw_weights[c] / weight_sum;
      assigned += g.weight;
      g.mean.resize(d);
      g.var.resize(d);
      for (std::size_t j = 0; j < d; ++j) {
        g.mean[j] = center[j] + spec.component_spread * rng.normal();
        const double sigma = spec.sigma_min + (spec.sigma_max - spec.sigma_min) * rng.uniform();
        g.var[j] = sigma * sigma;
        pooled_var += g.var[j];
      }
      native[k].push_back(std::move(g));
    }
    pooled_var /= static_cast<double>(raw_weights.size() * d);

    const auto dir = unit_direction(spec.dim, rng);
    const double shift = spec.l2_shift * std::sqrt(pooled_var);
    for (const auto& g : native[k]) {
      GaussianComponent s = g;
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += shift * dir[j];
      l2[k].push_back(std::move(s));
    }
  }
  return {ConditionalGMM(spec.dim, std::move(native)), ConditionalGMM(spec.dim, std::move(l2))};
}

Frame draw_marginal(const ConditionalGMM& p, CounterRng& rng) {
  const int label = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(p.num_labels())));
  return sample_one(p, label, rng);
}

}  // namespace

void WorldSpec::validate() const {
  if (dim < 1) throw std::invalid_argument("world spec: dim must be >= 1");
  if (num_labels < 1) throw std::invalid_argument("world spec: labels must be >= 1");
  if (components < 1) throw std::invalid_argument("world spec: components must be >= 1");
  if (codebook_size < 1) throw std::invalid_argument("world spec: codebook size must be >= 1");
  if (!(sigma_min > 0.0) || !(sigma_max >= sigma_min) || !std::isfinite(sigma_max)) {
    throw std::invalid_argument("world spec: need 0 < sigma_min <= sigma_max");
  }
  if (!(weight_min > 0.0) || !(weight_max >= weight_min) || !std::isfinite(weight_max)) {
    throw std::invalid_argument("world spec: need 0 < weight_min <= weight_max");
  }
  if (!std::isfinite(l2_shift) || !std::isfinite(center_scale) ||
      !std::isfinite(component_spread)) {
    throw std::invalid_argument("world spec: shift and scale parameters must be finite");
  }
  if (!(h_noise >= 0.0) || !std::isfinite(h_noise)) {
    throw std::invalid_argument("world spec: h noise must be finite and >= 0");
  }
  if (standardizer_samples < 2) {
    throw std::invalid_argument("world spec: standardizer samples must be >= 2");
  }
  if (separation_samples < 1 || max_attempts < 1) {
    throw std::invalid_argument("world spec: separation samples and attempts must be >= 1");
  }
}

void World::validate() const {
  if (native.dim() < 1 || native.num_labels() < 1) {
    throw std::invalid_argument("world: empty native prior");
  }
  if (l2.dim() != native.dim() || l2.num_labels() != native.num_labels()) {
    throw std::invalid_argument("world: native and L2 priors differ in dimension or labels");
  }
  if (codebook.size() == 0) throw std::invalid_argument("world: empty codebook");
  if (codebook.dim() != native.dim()) throw std::invalid_argument("world: codebook dimension");
  if (standardizer.dim() != native.dim()) {
    throw std::invalid_argument("world: standardizer dimension");
  }
  if (!(h_noise >= 0.0) || !std::isfinite(h_noise)) {
    throw std::invalid_argument("world: h noise must be finite and >= 0");
  }
}

double class_separation(const ConditionalGMM& native, const ConditionalGMM& l2,
                        std::size_t samples, CounterRng& rng) {
  double native_sum = 0.0;
  double l2_sum = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const int label = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(native.num_labels())));
    native_sum += native_class_prob(native, l2, label, sample_one(native, label, rng));
    l2_sum += native_class_prob(native, l2, label, sample_one(l2, label, rng));
  }
  return (native_sum - l2_sum) / static_cast<double>(samples);
}

World gen_world(const WorldSpec& spec) {
  spec.validate();
  const bool check = spec.l2_shift != 0.0 && spec.min_separation > 0.0;
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    const uint64_t base = static_cast<uint64_t>(attempt) * kStreamsPerAttempt;
    CounterRng prior_rng(spec.seed, StreamDomain::kWorld, base);
    auto [native, l2] = draw_priors(spec, prior_rng);

    CounterRng check_rng(spec.seed, StreamDomain::kWorld, base + 3);
    const double separation = class_separation(
        native, l2, static_cast<std::size_t>(spec.separation_samples), check_rng);
    if (check && separation < spec.min_separation) continue;

    CounterRng code_rng(spec.seed, StreamDomain::kWorld, base + 1);
    std::vector<Frame> entries;
    std::set<Frame> seen;
    while (entries.size() < static_cast<std::size_t>(spec.codebook_size)) {
      Frame e = draw_marginal(native, code_rng);
      if (seen.insert(e).second) entries.push_back(std::move(e));
    }

    CounterRng std_rng(spec.seed, StreamDomain::kWorld, base + 2);
    std::vector<Frame> sample;
    sample.reserve(static_cast<std::size_t>(spec.standardizer_samples));
    for (int i = 0; i < spec.standardizer_samples; ++i) sample.push_back(draw_marginal(native, std_rng));

    World w;
    w.spec = spec;
    w.native = std::move(native);
    w.l2 = std::move(l2);
    w.codebook = Codebook(std::move(entries));
    w.standardizer = fit_standardizer(sample);
    w.h_noise = spec.h_noise;
    w.attempts = attempt + 1;
    w.separation = separation;
    return w;
  }
  throw std::runtime_error("gen_world: no generation reached separation " +
                           fmt17(spec.min_separation) + " in " +
                           std::to_string(spec.max_attempts) + " attempts");
}

const char* source_name(Source s) { return s == Source::kNative ? "native" : "l2"; }

Source parse_source(const std::string& name) {
  if (name == "native") return Source::kNative;
  if (name == "l2") return Source::kL2;
  throw std::invalid_argument("unknown source '" + name + "' (expected native or l2)");
}

Dataset gen_dataset(const World& world, Source which, int n_seq, int seq_len, uint64_t seed) {
  if (n_seq < 1 || seq_len < 1) {
    throw std::invalid_argument("gen_dataset: n_seq and seq_len must be >= 1");
  }
  world.validate();
  const ConditionalGMM& prior = which == Source::kNative ? world.native : world.l2;
  Dataset ds;
  ds.dim = world.dim();
  ds.num_labels = world.num_labels();
  ds.sequences.resize(static_cast<std::size_t>(n_seq));
  const uint64_t source_bit = which == Source::kNative ? 0 : 1;
  for (int n = 0; n < n_seq; ++n) {
    CounterRng rng(seed, StreamDomain::kDataset, static_cast<uint64_t>(n) * 2 + source_bit);
    auto& seq = ds.sequences[static_cast<std::size_t>(n)];
    char id[32];
    std::snprintf(id, sizeof(id), "%s-%06d", source_name(which), n);
    seq.id = id;
    for (int i = 0; i < seq_len; ++i) {
      const int label = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(ds.num_labels)));
      Frame c = sample_one(prior, label, rng);
      const Frame zc1 = snap_to_codebook(c, world.codebook).entry;
      Frame zc2(c.size());
      Frame h(c.size());
      for (std::size_t j = 0; j < c.size(); ++j) {
        zc2[j] = c[j] - zc1[j];
        h[j] = c[j] + world.h_noise * rng.normal();
      }
      seq.labels.push_back(label);
      seq.frames.push_back(std::move(c));
      seq.zc2.push_back(std::move(zc2));
      seq.h.push_back(std::move(h));
    }
  }
  return ds;
}

FrameMetrics frame_metrics(const World& world, std::span<const double> input,
                           std::span<const double> output, int label) {
  const Frame a = world.standardizer.standardize(input);
  const Frame b = world.standardizer.standardize(output);
  FrameMetrics m;
  m.identity_l2 = std::sqrt(squared_distance(a, b));
  m.identity_cos = cosine_similarity(a, b);
  m.native_prob = native_class_prob(world.native, world.l2, label, output);
  return m;
}

SequenceMetrics sequence_metrics(const World& world, const LatentSequence& input,
                                 const LatentSequence& output, int t_start) {
  if (input.size() != output.size()) {
    throw std::invalid_argument("sequence_metrics: input and output lengths differ");
  }
  SequenceMetrics m;
  m.id = input.id;
  m.t_start = t_start;
  for (std::size_t i = 0; i < input.size(); ++i) {
    const auto f = frame_metrics(world, input.frames[i], output.frames[i], input.labels[i]);
    m.identity_l2 += f.identity_l2;
    m.native_prob += f.native_prob;
  }
  const double n = static_cast<double>(input.size());
  m.identity_l2 /= n;
  m.native_prob /= n;
  return m;
}

std::string SweepTable::to_csv() const {
  std::string out = kHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.t_start) + ',' + fmt17(r.identity_l2) + ',' + fmt17(r.identity_cos) +
           ',' + fmt17(r.native_prob) + ',' + std::to_string(r.n_frames) + '\n';
  }
  return out;
}

SweepTable sweep(const World& world, const SweepModel& model, const SweepConfig& cfg,
                 const Schedule& s) {
  if (cfg.t_starts.empty()) throw std::invalid_argument("sweep: no t_start values");
  for (std::size_t i = 0; i < cfg.t_starts.size(); ++i) {
    const int t = cfg.t_starts[i];
    if (t < 0 || t > s.num_steps()) {
      throw std::out_of_range("sweep: t_start " + std::to_string(t) + " outside [0, " +
                              std::to_string(s.num_steps()) + "]");
    }
    if (i > 0 && !(t > cfg.t_starts[i - 1])) {
      throw std::invalid_argument("sweep: t_start values must be distinct and ascending");
    }
  }
  if (model.standardizer == nullptr) throw std::invalid_argument("sweep: no model standardizer");

  const Dataset eval = gen_dataset(world, Source::kL2, cfg.n_seq, cfg.seq_len, cfg.seed);
  std::vector<uint64_t> first_index(eval.sequences.size());
  uint64_t total = 0;
  for (std::size_t n = 0; n < eval.sequences.size(); ++n) {
    first_index[n] = total;
    total += eval.sequences[n].size();
  }

  ConversionContext ctx;
  ctx.schedule = &s;
  ctx.standardizer = model.standardizer;
  ctx.eps = model.eps;
  ctx.codebook = &world.codebook;
  ctx.residual = model.residual;

  SweepTable table;
  std::vector<FrameMetrics> metrics(total);
  std::vector<int> labels(total);
  for (int t_start : cfg.t_starts) {
    SamplerConfig sc;
    sc.t_start = t_start;
    sc.seed = cfg.seed;
    sc.snap = cfg.snap;
    sc.predict_residual = cfg.predict_residual;
    sc.threads = 1;
    parallel_for(eval.sequences.size(), cfg.threads, [&](std::size_t n) {
      const auto& seq = eval.sequences[n];
      const LatentSequence out = convert(seq, ctx, sc, first_index[n]);
      for (std::size_t i = 0; i < seq.size(); ++i) {
        metrics[first_index[n] + i] = frame_metrics(world, seq.frames[i], out.frames[i], seq.labels[i]);
        labels[first_index[n] + i] = seq.labels[i];
      }
    });

    SweepRow row;
    row.t_start = t_start;
    row.n_frames = total;
    if (cfg.aggregation == Aggregation::kFrames) {
      for (const auto& m : metrics) {
        row.identity_l2 += m.identity_l2;
        row.identity_cos += m.identity_cos;
        row.native_prob += m.native_prob;
      }
      row.identity_l2 /= static_cast<double>(total);
      row.identity_cos /= static_cast<double>(total);
      row.native_prob /= static_cast<double>(total);
    } else {
      const auto k = static_cast<std::size_t>(world.num_labels());
      std::vector<FrameMetrics> sums(k);
      std::vector<std::size_t> counts(k, 0);
      for (std::size_t i = 0; i < total; ++i) {
        const auto l = static_cast<std::size_t>(labels[i]);
        sums[l].identity_l2 += metrics[i].identity_l2;
        sums[l].identity_cos += metrics[i].identity_cos;
        sums[l].native_prob += metrics[i].native_prob;
        ++counts[l];
      }
      std::size_t present = 0;
      for (std::size_t l = 0; l < k; ++l) {
        if (counts[l] == 0) continue;
        const double c = static_cast<double>(counts[l]);
        row.identity_l2 += sums[l].identity_l2 / c;
        row.identity_cos += sums[l].identity_cos / c;
        row.native_prob += sums[l].native_prob / c;
        ++present;
      }
      row.identity_l2 /= static_cast<double>(present);
      row.identity_cos /= static_cast<double>(present);
      row.native_prob /= static_cast<double>(present);
    }
    table.rows.push_back(row);
  }
  return table;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n < 2) throw std::invalid_argument("linspace: need at least 2 points");
  std::vector<double> out(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

Fig1Data fig1_data(const ConditionalGMM& prior, int label, double x0_l2,
                   std::span<const int> t_starts, std::span<const double> grid,
                   const Schedule& s) {
  if (prior.dim() != 1) {
    throw std::invalid_argument("fig1_data: prior is not 1-D; select a marginal axis");
  }
  if (t_starts.empty()) throw std::invalid_argument("fig1_data: no t_start values");
  Fig1Data out;
  out.grid.assign(grid.begin(), grid.end());
  out.prior.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.prior[i] = std::exp(prior_logpdf(prior, label, grid.subspan(i, 1)));
  }
  const double prior_mass = trapezoid(out.grid, out.prior);
  for (auto& v : out.prior) v /= prior_mass;

  for (int t_start : t_starts) {
    if (t_start < 1 || t_start > s.num_steps()) {
      throw std::out_of_range("fig1_data: t_start " + std::to_string(t_start) + " outside [1, " +
                              std::to_string(s.num_steps()) + "]");
    }
    const int t = t_start - 1;
    const double ab = s.alpha_bar(t);
    const double x_t = std::sqrt(ab) * x0_l2;
    PosteriorGrid post = posterior_grid(prior, label, t, x_t, grid, s);
    post.t_start = t_start;

    std::vector<double> lik(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double r = x_t - std::sqrt(ab) * grid[i];
      lik[i] = std::exp(-r * r / (2.0 * (1.0 - ab)));
    }
    const double mass = trapezoid(out.grid, lik);
    for (auto& v : lik) v /= mass;

    out.t_starts.push_back(t_start);
    out.posteriors.push_back(std::move(post));
    out.likelihoods.push_back(std::move(lik));
  }
  return out;
}

}  // namespace priorshift
