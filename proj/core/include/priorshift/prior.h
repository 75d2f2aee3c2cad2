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
#include <span>
#include <vector>

#include "priorshift/latent.h"
#include "priorshift/rng.h"
#include "priorshift/schedule.h"

namespace priorshift {

struct GaussianComponent {
  double weight = 1.0;
  std::vector<double> mean;
  std::vector<double> var;  // diagonal

  bool operator==(const GaussianComponent&) const = default;
};

// Per-label diagonal Gaussian mixture p(x0 | label). Serves both as the
// native prior and as the non-native source distribution.
class ConditionalGMM {
 public:
  ConditionalGMM() = default;
  // Weights must sum to 1 within 1e-12 per label; variances must be positive.
  ConditionalGMM(int dim, std::vector<std::vector<GaussianComponent>> per_label);

  // One label, one component.
  static ConditionalGMM single_gaussian(std::vector<double> mean, std::vector<double> var);

  int dim() const { return dim_; }
  int num_labels() const { return static_cast<int>(per_label_.size()); }
  const std::vector<GaussianComponent>& components(int label) const;
  const std::vector<std::vector<GaussianComponent>>& all_components() const {
    return per_label_;
  }

  // The same mixture expressed in standardized coordinates.
  ConditionalGMM standardized(const Standardizer& s) const;
  // Marginal along one coordinate: a 1-D mixture with the same weights.
  ConditionalGMM marginal(int axis) const;

  bool operator==(const ConditionalGMM&) const = default;

 private:
  int dim_ = 0;
  std::vector<std::vector<GaussianComponent>> per_label_;
};

Frame sample_one(const ConditionalGMM& p, int label, CounterRng& rng);
// i.i.d. draws: component by weight, then the diagonal Gaussian.
std::vector<Frame> sample_prior(const ConditionalGMM& p, int label, std::size_t n,
                                CounterRng& rng);

// log p(x0 | label), the un-noised prior density.
double prior_logpdf(const ConditionalGMM& p, int label, std::span<const double> x0);

// log p_t(x_t | label) = log sum_k w_k N(x_t | sqrt(ab) mu_k, ab var_k + (1 - ab)),
// the closed form of the noised marginal for a Gaussian-mixture prior.
double noised_marginal_logpdf(const ConditionalGMM& p, int label, int t,
                              std::span<const double> x_t, const Schedule& s);
double noised_marginal_logpdf_at(const ConditionalGMM& p, int label, double alpha_bar,
                                 std::span<const double> x_t);

// E[eps | x_t, t, label] = -sqrt(1 - ab) * grad log p_t(x_t | label), from the
// responsibility-weighted component scores. This is the Bayes-optimal
// epsilon predictor for the prior.
Frame exact_eps(const ConditionalGMM& p, int label, int t, std::span<const double> x_t,
                const Schedule& s);
Frame exact_eps_at(const ConditionalGMM& p, int label, double alpha_bar,
                   std::span<const double> x_t);

double trapezoid(std::span<const double> x, std::span<const double> y);

struct PosteriorGrid {
  std::vector<double> grid;
  std::vector<double> density;
  int t_start = 0;
  double x_t = 0.0;

  double integral() const;
  double mean() const;
  double variance() const;
};

// Normalised p(x0 | label) * exp(-(x_t - sqrt(ab) x0)^2 / (2 (1 - ab))) on a
// 1-D grid. Throws when the prior is not 1-D, the grid is not ascending, or
// the normalised mass in the edge cells exceeds 1e-6.
PosteriorGrid posterior_grid(const ConditionalGMM& p, int label, int t, double x_t,
                             std::span<const double> grid, const Schedule& s);

struct PosteriorMoments {
  double mean = 0.0;
  double variance = 0.0;
};

// Conjugate single-Gaussian posterior of x0 given x_t.
PosteriorMoments gaussian_posterior_moments(double prior_mean, double prior_var, int t,
                                            double x_t, const Schedule& s);
PosteriorMoments gaussian_posterior_moments_at(double prior_mean, double prior_var,
                                               double alpha_bar, double x_t);

// P(native | x, label) with equal class priors.
double native_class_prob(const ConditionalGMM& native, const ConditionalGMM& l2, int label,
                         std::span<const double> x);

}  // namespace priorshift
