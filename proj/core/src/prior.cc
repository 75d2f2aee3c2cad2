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

#include "priorshift/prior.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace priorshift {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_sum_exp(std::span<const double> v) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : v) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

// log N(x | sqrt(ab) mu, ab var + (1 - ab)) per component, plus log weight.
void component_log_terms(const std::vector<GaussianComponent>& comps, double alpha_bar,
                         std::span<const double> x, std::vector<double>& out) {
  const double scale = std::sqrt(alpha_bar);
  const double noise = 1.0 - alpha_bar;
  out.resize(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const auto& c = comps[k];
    double lp = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double v = alpha_bar * c.var[i] + noise;
      const double r = x[i] - scale * c.mean[i];
      lp -= 0.5 * (kLog2Pi + std::log(v) + r * r / v);
    }
    out[k] = (c.weight > 0.0 ? std::log(c.weight) : -std::numeric_limits<double>::infinity()) + lp;
  }
}

void check_alpha_bar(double alpha_bar) {
  if (!(alpha_bar > 0.0) || !(alpha_bar <= 1.0)) {
    throw std::invalid_argument("alpha_bar must lie in (0, 1]");
  }
}

void check_timestep(int t, const Schedule& s) {
  if (t < 0 || t >= s.num_steps()) {
    throw std::out_of_range("timestep " + std::to_string(t) + " outside [0, " +
                            std::to_string(s.num_steps() - 1) + "]");
  }
}

void check_frame(const ConditionalGMM& p, std::span<const double> x) {
  if (static_cast<int>(x.size()) != p.dim()) {
    throw std::invalid_argument("frame dimension " + std::to_string(x.size()) +
                                " does not match prior dimension " + std::to_string(p.dim()));
  }
}

}  // namespace

ConditionalGMM::ConditionalGMM(int dim, std::vector<std::vector<GaussianComponent>> per_label)
    : dim_(dim), per_label_(std::move(per_label)) {
  if (dim_ <= 0) throw std::invalid_argument("gmm: dimension must be positive");
  if (per_label_.empty()) throw std::invalid_argument("gmm: needs at least one label");
  for (std::size_t l = 0; l < per_label_.size(); ++l) {
    const auto& comps = per_label_[l];
    if (comps.empty()) {
      throw std::invalid_argument("gmm: label " + std::to_string(l) + " has no components");
    }
    double total = 0.0;
    for (const auto& c : comps) {
      if (!(c.weight >= 0.0)) throw std::invalid_argument("gmm: negative weight");
      if (static_cast<int>(c.mean.size()) != dim_ || static_cast<int>(c.var.size()) != dim_) {
        throw std::invalid_argument("gmm: component dimension mismatch");
      }
      for (double v : c.var) {
        if (!(v > 0.0) || !std::isfinite(v)) {
          throw std::invalid_argument("gmm: variances must be positive");
        }
      }
      for (double m : c.mean) {
        if (!std::isfinite(m)) throw std::invalid_argument("gmm: non-finite mean");
      }
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("gmm: weights of label " + std::to_string(l) +
                                  " do not sum to 1");
    }
  }
}

ConditionalGMM ConditionalGMM::single_gaussian(std::vector<double> mean, std::vector<double> var) {
  const int d = static_cast<int>(mean.size());
  return ConditionalGMM(d, {{GaussianComponent{1.0, std::move(mean), std::move(var)}}});
}

const std::vector<GaussianComponent>& ConditionalGMM::components(int label) const {
  if (label < 0 || label >= num_labels()) {
    throw std::out_of_range("gmm: unknown label " + std::to_string(label));
  }
  return per_label_[static_cast<std::size_t>(label)];
}

ConditionalGMM ConditionalGMM::standardized(const Standardizer& s) const {
  if (s.dim() != dim_) throw std::invalid_argument("gmm: standardizer dimension mismatch");
  auto comps = per_label_;
  for (auto& label : comps) {
    for (auto& c : label) {
      for (int i = 0; i < dim_; ++i) {
        const auto u = static_cast<std::size_t>(i);
        const double sd = s.stddev()[u];
        c.mean[u] = (c.mean[u] - s.mean()[u]) / sd;
        c.var[u] = c.var[u] / (sd * sd);
      }
    }
  }
  return ConditionalGMM(dim_, std::move(comps));
}

ConditionalGMM ConditionalGMM::marginal(int axis) const {
  if (axis < 0 || axis >= dim_) throw std::out_of_range("gmm: marginal axis out of range");
  std::vector<std::vector<GaussianComponent>> comps;
  for (const auto& label : per_label_) {
    auto& out = comps.emplace_back();
    for (const auto& c : label) {
      const auto a = static_cast<std::size_t>(axis);
      out.push_back({c.weight, {c.mean[a]}, {c.var[a]}});
    }
  }
  return ConditionalGMM(1, std::move(comps));
}

Frame sample_one(const ConditionalGMM& p, int label, CounterRng& rng) {
  const auto& comps = p.components(label);
  const double u = rng.uniform();
  std::size_t k = 0;
  double cumulative = comps[0].weight;
  while (u >= cumulative && k + 1 < comps.size()) {
    ++k;
    cumulative += comps[k].weight;
  }
  // Skip trailing zero-weight components that rounding could land on.
  while (comps[k].weight == 0.0 && k > 0) --k;
  const auto& c = comps[k];
  Frame x(c.mean.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = c.mean[i] + std::sqrt(c.var[i]) * rng.normal();
  return x;
}

std::vector<Frame> sample_prior(const ConditionalGMM& p, int label, std::size_t n,
                                CounterRng& rng) {
  if (n == 0) throw std::invalid_argument("sample_prior: n must be >= 1");
  p.components(label);
  std::vector<Frame> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_one(p, label, rng));
  return out;
}

double prior_logpdf(const ConditionalGMM& p, int label, std::span<const double> x0) {
  return noised_marginal_logpdf_at(p, label, 1.0, x0);
}

double noised_marginal_logpdf_at(const ConditionalGMM& p, int label, double alpha_bar,
                                 std::span<const double> x_t) {
  check_alpha_bar(alpha_bar);
  check_frame(p, x_t);
  std::vector<double> terms;
  component_log_terms(p.components(label), alpha_bar, x_t, terms);
  return log_sum_exp(terms);
}

double noised_marginal_logpdf(const ConditionalGMM& p, int label, int t,
                              std::span<const double> x_t, const Schedule& s) {
  check_timestep(t, s);
  return noised_marginal_logpdf_at(p, label, s.alpha_bar(t), x_t);
}

Frame exact_eps_at(const ConditionalGMM& p, int label, double alpha_bar,
                   std::span<const double> x_t) {
  check_alpha_bar(alpha_bar);
  check_frame(p, x_t);
  const auto& comps = p.components(label);
  std::vector<double> terms;
  component_log_terms(comps, alpha_bar, x_t, terms);
  const double norm = log_sum_exp(terms);

  const double scale = std::sqrt(alpha_bar);
  const double noise = 1.0 - alpha_bar;
  const double noise_scale = std::sqrt(noise);
  Frame eps(x_t.size(), 0.0);
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const double r = std::exp(terms[k] - norm);
    if (r == 0.0) continue;
    const auto& c = comps[k];
    for (std::size_t i = 0; i < x_t.size(); ++i) {
      const double v = alpha_bar * c.var[i] + noise;
      eps[i] += r * (x_t[i] - scale * c.mean[i]) / v;
    }
  }
  for (auto& e : eps) e *= noise_scale;
  return eps;
}

Frame exact_eps(const ConditionalGMM& p, int label, int t, std::span<const double> x_t,
                const Schedule& s) {
  check_timestep(t, s);
  return exact_eps_at(p, label, s.alpha_bar(t), x_t);
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("trapezoid: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return acc;
}

double PosteriorGrid::integral() const { return trapezoid(grid, density); }

double PosteriorGrid::mean() const {
  std::vector<double> weighted(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) weighted[i] = grid[i] * density[i];
  return trapezoid(grid, weighted) / integral();
}

double PosteriorGrid::variance() const {
  const double m = mean();
  std::vector<double> weighted(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double c = grid[i] - m;
    weighted[i] = c * c * density[i];
  }
  return trapezoid(grid, weighted) / integral();
}

PosteriorGrid posterior_grid(const ConditionalGMM& p, int label, int t, double x_t,
                             std::span<const double> grid, const Schedule& s) {
  if (p.dim() != 1) throw std::invalid_argument("posterior_grid: prior must be 1-D");
  check_timestep(t, s);
  if (grid.size() < 3) throw std::invalid_argument("posterior_grid: grid needs >= 3 points");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("posterior_grid: grid not ascending");
  }
  const double ab = s.alpha_bar(t);
  const double scale = std::sqrt(ab);
  const double noise = 1.0 - ab;

  std::vector<double> log_density(grid.size());
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x0 = grid[i];
    const double r = x_t - scale * x0;
    log_density[i] = prior_logpdf(p, label, std::span<const double>(&x0, 1)) - r * r / (2.0 * noise);
    hi = std::max(hi, log_density[i]);
  }
  PosteriorGrid out;
  out.grid.assign(grid.begin(), grid.end());
  out.density.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out.density[i] = std::exp(log_density[i] - hi);
  const double z = trapezoid(out.grid, out.density);
  for (auto& v : out.density) v /= z;

  const std::size_t last = grid.size() - 1;
  const double edge_mass = 0.5 * out.density[0] * (grid[1] - grid[0]) +
                           0.5 * out.density[last] * (grid[last] - grid[last - 1]);
  if (edge_mass > 1e-6) {
    throw std::invalid_argument("posterior_grid: grid too narrow (edge mass " +
                                std::to_string(edge_mass) + ")");
  }
  out.t_start = t;
  out.x_t = x_t;
  return out;
}

PosteriorMoments gaussian_posterior_moments_at(double prior_mean, double prior_var,
                                               double alpha_bar, double x_t) {
  if (!(prior_var > 0.0)) {
    throw std::invalid_argument("gaussian_posterior_moments: prior variance must be positive");
  }
  if (!(alpha_bar > 0.0) || !(alpha_bar < 1.0)) {
    throw std::invalid_argument("gaussian_posterior_moments: alpha_bar must lie in (0, 1)");
  }
  const double noise = 1.0 - alpha_bar;
  const double precision = 1.0 / prior_var + alpha_bar / noise;
  const double mean = (prior_mean / prior_var + std::sqrt(alpha_bar) * x_t / noise) / precision;
  return {mean, 1.0 / precision};
}

PosteriorMoments gaussian_posterior_moments(double prior_mean, double prior_var, int t,
                                            double x_t, const Schedule& s) {
  check_timestep(t, s);
  return gaussian_posterior_moments_at(prior_mean, prior_var, s.alpha_bar(t), x_t);
}

double native_class_prob(const ConditionalGMM& native, const ConditionalGMM& l2, int label,
                         std::span<const double> x) {
  if (native.dim() != l2.dim() || native.num_labels() != l2.num_labels()) {
    throw std::invalid_argument("native_class_prob: priors differ in dimension or vocabulary");
  }
  const double log_native = prior_logpdf(native, label, x);
  const double log_l2 = prior_logpdf(l2, label, x);
  return 1.0 / (1.0 + std::exp(log_l2 - log_native));
}

}  // namespace priorshift
