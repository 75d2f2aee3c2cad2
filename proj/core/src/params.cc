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

#include <cmath>

#include "priorshift/params.h"

namespace priorshift {

std::size_t ParamSet::add(std::string name, std::size_t rows, std::size_t cols) {
  ParamBlock b{std::move(name), values_.size(), rows, cols};
  values_.resize(values_.size() + b.size(), 0.0);
  blocks_.push_back(std::move(b));
  return blocks_.size() - 1;
}

std::optional<std::size_t> ParamSet::find(const std::string& name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].name == name) return i;
  }
  return std::nullopt;
}

bool ParamSet::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void matvec_add(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

void matvec_transpose_add(const double* w, std::size_t rows, std::size_t cols,
                          const double* y_grad, double* x_grad) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    const double g = y_grad[r];
    for (std::size_t c = 0; c < cols; ++c) x_grad[c] += row[c] * g;
  }
}

void outer_add(std::size_t rows, std::size_t cols, const double* y_grad, const double* x,
               double* w_grad) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = w_grad + r * cols;
    const double g = y_grad[r];
    for (std::size_t c = 0; c < cols; ++c) row[c] += g * x[c];
  }
}

}  // namespace priorshift
