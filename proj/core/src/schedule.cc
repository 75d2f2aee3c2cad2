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

#include "priorshift/schedule.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace priorshift {

Schedule Schedule::linear(double beta_min, double beta_max, int num_steps) {
  if (num_steps < 2) {
    throw std::invalid_argument("schedule: T must be >= 2, got " + std::to_string(num_steps));
  }
  if (!(beta_min > 0.0) || !(beta_max < 1.0) || !std::isfinite(beta_min) ||
      !std::isfinite(beta_max)) {
    throw std::invalid_argument("schedule: betas must lie in (0, 1)");
  }
  if (beta_min > beta_max) {
    throw std::invalid_argument("schedule: beta_min > beta_max");
  }

  Schedule s;
  s.beta_min_ = beta_min;
  s.beta_max_ = beta_max;
  const auto n = static_cast<std::size_t>(num_steps);
  s.beta_.resize(n);
  s.alpha_.resize(n);
  s.alpha_bar_.resize(n);
  s.alpha_bar_wide_.resize(n);

  const long double lo = beta_min;
  const long double span = static_cast<long double>(beta_max) - lo;
  long double running = 1.0L;
  for (std::size_t t = 0; t < n; ++t) {
    long double b = lo + span * static_cast<long double>(t) / static_cast<long double>(n - 1);
    if (t == n - 1) b = beta_max;
    s.beta_[t] = static_cast<double>(b);
    s.alpha_[t] = 1.0 - s.beta_[t];
    running *= 1.0L - static_cast<long double>(s.beta_[t]);
    s.alpha_bar_wide_[t] = running;
    s.alpha_bar_[t] = static_cast<double>(running);
  }
  return s;
}

void Schedule::check_index(int t) const {
  if (t < 0 || t >= num_steps()) {
    throw std::out_of_range("schedule: timestep " + std::to_string(t) + " outside [0, " +
                            std::to_string(num_steps() - 1) + "]");
  }
}

double Schedule::beta(int t) const {
  check_index(t);
  return beta_[static_cast<std::size_t>(t)];
}

double Schedule::alpha(int t) const {
  check_index(t);
  return alpha_[static_cast<std::size_t>(t)];
}

double Schedule::alpha_bar(int t) const {
  if (t == -1) return alpha_bar_before_start();
  check_index(t);
  return alpha_bar_[static_cast<std::size_t>(t)];
}

long double Schedule::alpha_bar_wide(int t) const {
  if (t == -1) return 1.0L;
  check_index(t);
  return alpha_bar_wide_[static_cast<std::size_t>(t)];
}

}  // namespace priorshift
