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

#include "verify.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "priorshift/denoiser.h"
#include "priorshift/prior.h"
#include "priorshift/rng.h"
#include "priorshift/sampler.h"

namespace priorshift::cli {
namespace {

double uniform(CounterRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

std::vector<double> grid_between(double lo, double hi, double step) {
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

SuiteResult posterior_suite(const Schedule& s, uint64_t seed) {
  SuiteResult r{"posterior-vs-grid", true, 50, 0.0, 1e-6};
  CounterRng rng(seed, StreamDomain::kVerify, 1);
  for (std::size_t i = 0; i < r.cases; ++i) {
    const double mu = uniform(rng, -2.0, 2.0);
    const double var = uniform(rng, 0.2, 2.0);
    const int t = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(s.num_steps())));
    const double ab = s.alpha_bar(t);
    const double x0 = mu + std::sqrt(var) * rng.normal();
    const double x_t = std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * rng.normal();

    const double sd_prior = std::sqrt(var);
    const double sd_lik = std::sqrt((1.0 - ab) / ab);
    const double centre_lik = x_t / std::sqrt(ab);
    const double lo = std::min(mu - 12.0 * sd_prior, centre_lik - 12.0 * sd_lik);
    const double hi = std::max(mu + 12.0 * sd_prior, centre_lik + 12.0 * sd_lik);
    const auto grid = grid_between(lo, hi, std::min(sd_prior, sd_lik) / 50.0);

    const auto prior = ConditionalGMM::single_gaussian({mu}, {var});
    const auto post = posterior_grid(prior, 0, t, x_t, grid, s);
    const auto exact = gaussian_posterior_moments(mu, var, t, x_t, s);
    const double e_mean = std::abs(post.mean() - exact.mean) / std::max(std::abs(exact.mean), 1e-8);
    const double e_var = std::abs(post.variance() - exact.variance) / exact.variance;
    r.max_error = std::max({r.max_error, e_mean, e_var});
  }
  r.passed = r.max_error < r.tolerance;
  return r;
}

ConditionalGMM random_gmm(int dim, CounterRng& rng) {
  const int k = 1 + static_cast<int>(rng.uniform_int(3));
  std::vector<GaussianComponent> comps(static_cast<std::size_t>(k));
  double total = 0.0;
  for (auto& c : comps) {
    c.weight = uniform(rng, 0.2, 1.0);
    total += c.weight;
    for (int j = 0; j < dim; ++j) {
      c.mean.push_back(uniform(rng, -2.0, 2.0));
      c.var.push_back(uniform(rng, 0.1, 1.5));
    }
  }
  double assigned = 0.0;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    comps[i].weight = i + 1 == comps.size() ? 1.0 - assigned : comps[i].weight / total;
    assigned += comps[i].weight;
  }
  return ConditionalGMM(dim, {comps});
}

SuiteResult score_suite(const Schedule& s, uint64_t seed) {
  SuiteResult r{"score-vs-finite-difference", true, 100, 0.0, 1e-6};
  CounterRng rng(seed, StreamDomain::kVerify, 2);
  const int dims[] = {1, 2, 8};
  for (std::size_t i = 0; i < r.cases; ++i) {
    const int d = dims[i % 3];
    const auto p = random_gmm(d, rng);
    const int t = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(s.num_steps())));
    const double ab = s.alpha_bar(t);
    const Frame x0 = sample_one(p, 0, rng);
    Frame x_t(x0.size());
    for (std::size_t j = 0; j < x0.size(); ++j) {
      x_t[j] = std::sqrt(ab) * x0[j] + std::sqrt(1.0 - ab) * rng.normal();
    }
    const Frame eps = exact_eps(p, 0, t, x_t, s);
    double num = 0.0, den = 0.0;
    for (int j = 0; j < d; ++j) {
      const double h = 1e-5 * std::max(1.0, std::abs(x_t[j]));
      Frame up = x_t, dn = x_t;
      up[j] += h;
      dn[j] -= h;
      const double grad = (noised_marginal_logpdf(p, 0, t, up, s) -
                           noised_marginal_logpdf(p, 0, t, dn, s)) / (2.0 * h);
      const double fd = -std::sqrt(1.0 - ab) * grad;
      num += (eps[j] - fd) * (eps[j] - fd);
      den += fd * fd;
    }
    r.max_error = std::max(r.max_error, std::sqrt(num) / std::max(std::sqrt(den), 1e-8));
  }
  r.passed = r.max_error < r.tolerance;
  return r;
}

SuiteResult ddim_suite(const Schedule& s, uint64_t seed) {
  SuiteResult r{"ddim-identities", true, 1000, 0.0, 1e-12};
  CounterRng rng(seed, StreamDomain::kVerify, 3);
  for (std::size_t i = 0; i < r.cases; ++i) {
    const int d = 1 + static_cast<int>(rng.uniform_int(8));
    const int t = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(s.num_steps())));
    Frame x0(static_cast<std::size_t>(d)), eps(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      x0[static_cast<std::size_t>(j)] = 2.0 * rng.normal();
      eps[static_cast<std::size_t>(j)] = rng.normal();
    }
    const Frame x_t = forward_corrupt(x0, t, eps, s);
    const Frame back = reconstruct_x0(x_t, t, eps, s);
    const Frame prev = ddim_step(x_t, t, eps, s);
    const Frame want_prev = t == 0 ? x0 : forward_corrupt(x0, t - 1, eps, s);
    for (int j = 0; j < d; ++j) {
      const auto k = static_cast<std::size_t>(j);
      const double scale = std::max(1.0, std::abs(x0[k]));
      r.max_error = std::max({r.max_error, std::abs(back[k] - x0[k]) / scale,
                              std::abs(prev[k] - want_prev[k]) / scale});
    }
  }
  r.passed = r.max_error < r.tolerance;
  return r;
}

// Max over parameters of |analytic - central difference| / max(|a|, |n|, floor).
double check_gradient(std::vector<double>& values, const std::vector<double>& analytic,
                      const std::function<double()>& loss) {
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double keep = values[i];
    const double h = 1e-5 * std::max(1.0, std::abs(keep));
    values[i] = keep + h;
    const double up = loss();
    values[i] = keep - h;
    const double dn = loss();
    values[i] = keep;
    const double numeric = (up - dn) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

SuiteResult gradient_suite(const Schedule& s, uint64_t seed) {
  SuiteResult r{"gradient-check", true, 0, 0.0, 1e-4};
  CounterRng rng(seed, StreamDomain::kVerify, 4);
  DenoiserConfig dc;
  dc.dim = 2;
  dc.num_labels = 3;
  dc.num_steps = s.num_steps();
  dc.time_dim = 8;
  dc.cond_dim = 8;
  dc.hidden = {8};
  dc.dropout = 0.1;
  auto den = DenoiserParams::initialize(dc, seed);
  for (auto& v : den.params().values()) v += 0.1 * rng.normal();
  ResidualConfig rc;
  rc.dim = 2;
  rc.hidden = {8};
  auto res = ResidualParams::initialize(rc, seed + 1);
  for (auto& v : res.params().values()) v += 0.1 * rng.normal();

  std::vector<TrainingFrame> batch(4);
  for (auto& f : batch) {
    f.x0 = {rng.normal(), rng.normal()};
    f.label = static_cast<int>(rng.uniform_int(3));
    f.zc2 = {0.1 * rng.normal(), 0.1 * rng.normal()};
    f.h = {rng.normal(), rng.normal()};
  }
  const auto examples = draw_examples(batch, s, rng);

  const auto analytic = total_loss(den, res, examples, batch, 0.5, s, Mode::kTrain, true);
  const double e_den = check_gradient(den.params().values(), analytic.grad_denoiser, [&] {
    return diffusion_loss(den, examples, s, Mode::kTrain, false).loss;
  });
  const double e_res = check_gradient(res.params().values(), analytic.grad_residual, [&] {
    return total_loss(den, res, examples, batch, 0.5, s, Mode::kTrain, false).total;
  });
  r.cases = den.num_params() + res.num_params();
  r.max_error = std::max(e_den, e_res);
  r.passed = r.max_error < r.tolerance;
  return r;
}

}  // namespace

std::vector<SuiteResult> run_verify_suites(const Schedule& s, uint64_t seed) {
  return {gradient_suite(s, seed), posterior_suite(s, seed), score_suite(s, seed),
          ddim_suite(s, seed)};
}

}  // namespace priorshift::cli
