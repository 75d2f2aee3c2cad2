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
#include <string>
#include <vector>

namespace priorshift {

inline constexpr int kDefaultLatentDim = 8;

// One latent time slice (20 ms of audio in the codec this models).
using Frame = std::vector<double>;

// A per-frame latent sequence with aligned condition labels.
//
// `frames` holds the content latent that diffusion operates on. `zc2` and
// `h` are optional side channels (second content residual and the shared
// encoder feature); when present they have one entry per frame.
struct LatentSequence {
  std::string id;
  std::vector<int> labels;
  std::vector<Frame> frames;
  std::vector<Frame> zc2;
  std::vector<Frame> h;

  std::size_t size() const { return frames.size(); }
  int dim() const { return frames.empty() ? 0 : static_cast<int>(frames.front().size()); }
  bool has_zc2() const { return !zc2.empty(); }
  bool has_h() const { return !h.empty(); }

  // Throws std::invalid_argument when lengths, dimensions, labels or values
  // are inconsistent. num_labels <= 0 skips the vocabulary check.
  void validate(int num_labels = 0) const;
};

// Sequences sharing one frame dimension and label vocabulary.
struct Dataset {
  int dim = 0;
  int num_labels = 0;
  std::vector<LatentSequence> sequences;

  std::size_t num_frames() const;
  // Validates every sequence against dim and num_labels.
  void validate() const;
};

class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(std::vector<double> mean, std::vector<double> std);

  static Standardizer identity(int dim);

  int dim() const { return static_cast<int>(mean_.size()); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return std_; }

  Frame standardize(std::span<const double> x) const;
  Frame destandardize(std::span<const double> z) const;

  bool operator==(const Standardizer&) const = default;

 private:
  void check_dim(std::size_t n) const;

  std::vector<double> mean_;
  std::vector<double> std_;
};

// Per-dimension mean and population (divide-by-N) standard deviation over
// every frame of every sequence.
Standardizer fit_standardizer(std::span<const LatentSequence> dataset);
Standardizer fit_standardizer(std::span<const Frame> frames);

// Applies the standardizer to `frames`; labels and side channels are copied
// unchanged.
LatentSequence standardize(const LatentSequence& seq, const Standardizer& s);
LatentSequence destandardize(const LatentSequence& seq, const Standardizer& s);

class Codebook {
 public:
  Codebook() = default;
  // Rejects an empty table, mixed dimensions and duplicate entries.
  explicit Codebook(std::vector<Frame> entries);

  std::size_t size() const { return entries_.size(); }
  int dim() const { return entries_.empty() ? 0 : static_cast<int>(entries_.front().size()); }
  const std::vector<Frame>& entries() const { return entries_; }
  const Frame& operator[](std::size_t i) const { return entries_[i]; }

  bool operator==(const Codebook&) const = default;

 private:
  std::vector<Frame> entries_;
};

struct SnapResult {
  std::size_t index = 0;
  Frame entry;
};

// Nearest entry by squared Euclidean distance; ties go to the lowest index.
SnapResult snap_to_codebook(std::span<const double> frame, const Codebook& codebook);

struct LabelTrack {
  std::vector<int> labels;
};

// Nearest-neighbour upsampling with midpoint sampling:
// out[i] = labels[floor((i + 0.5) * L / target_len)].
std::vector<int> upsample_nearest(const LabelTrack& track, std::size_t target_len);

double squared_distance(std::span<const double> a, std::span<const double> b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace priorshift
