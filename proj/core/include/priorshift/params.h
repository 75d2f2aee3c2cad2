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

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace priorshift {

// A named, row-major matrix stored inside a ParamSet's flat value array.
struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const ParamBlock&) const = default;
};

// Flat parameter storage with a block layout. Gradients and optimiser state
// use the same flat indexing.
class ParamSet {
 public:
  std::size_t add(std::string name, std::size_t rows, std::size_t cols);

  std::size_t size() const { return values_.size(); }
  std::size_t num_blocks() const { return blocks_.size(); }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& block(std::size_t i) const { return blocks_[i]; }
  std::optional<std::size_t> find(const std::string& name) const;

  std::span<double> view(std::size_t i) {
    return {values_.data() + blocks_[i].offset, blocks_[i].size()};
  }
  std::span<const double> view(std::size_t i) const {
    return {values_.data() + blocks_[i].offset, blocks_[i].size()};
  }
  const double* data(std::size_t i) const { return values_.data() + blocks_[i].offset; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool all_finite() const;
  bool operator==(const ParamSet&) const = default;

 private:
  std::vector<ParamBlock> blocks_;
  std::vector<double> values_;
};

// y += W x for a row-major (rows x cols) W.
void matvec_add(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y);
// x_grad += W^T y_grad.
void matvec_transpose_add(const double* w, std::size_t rows, std::size_t cols,
                          const double* y_grad, double* x_grad);
// W_grad += y_grad x^T.
void outer_add(std::size_t rows, std::size_t cols, const double* y_grad, const double* x,
               double* w_grad);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double silu(double x) { return x * sigmoid(x); }
inline double silu_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

}  // namespace priorshift
