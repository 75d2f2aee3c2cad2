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

#include <span>
#include <vector>

namespace priorshift {

inline constexpr double kDefaultBetaMin = 1e-4;
inline constexpr double kDefaultBetaMax = 2e-2;
inline constexpr int kDefaultNumSteps = 100;

// Discrete diffusion clock. Timesteps are 0-indexed, t in [0, T-1];
// alpha_bar(t) is the cumulative product of (1 - beta_s) for s <= t, and
// alpha_bar(-1) == 1 is the empty-product boundary used by the last DDIM
// update. Immutable after construction.
class Schedule {
 public:
  // Evenly spaced betas from beta_min to beta_max inclusive.
  // Requires 0 < beta_min <= beta_max < 1 and num_steps >= 2.
  static Schedule linear(double beta_min, double beta_max, int num_steps);
  static Schedule default_linear() {
    return linear(kDefaultBetaMin, kDefaultBetaMax, kDefaultNumSteps);
  }

  int num_steps() const { return static_cast<int>(beta_.size()); }
  double beta_min() const { return beta_min_; }
  double beta_max() const { return beta_max_; }

  double beta(int t) const;
  double alpha(int t) const;
  // Valid for -1 <= t <= T-1.
  double alpha_bar(int t) const;
  // Extended-precision cumulative product the double table was rounded from.
  long double alpha_bar_wide(int t) const;
  static constexpr double alpha_bar_before_start() { return 1.0; }

  std::span<const double> betas() const { return beta_; }
  std::span<const double> alphas() const { return alpha_; }
  std::span<const double> alpha_bars() const { return alpha_bar_; }

  bool operator==(const Schedule& other) const {
    return beta_min_ == other.beta_min_ && beta_max_ == other.beta_max_ &&
           beta_.size() == other.beta_.size();
  }

 private:
  Schedule() = default;
  void check_index(int t) const;

  double beta_min_ = 0.0;
  double beta_max_ = 0.0;
  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
  std::vector<long double> alpha_bar_wide_;
};

}  // namespace priorshift
