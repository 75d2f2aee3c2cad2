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

#include "priorshift/latent.h"

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace priorshift {
namespace {

void check_frames(const std::vector<Frame>& frames, std::size_t n, std::size_t dim,
                  const char* what) {
  if (frames.size() != n) {
    throw std::invalid_argument(std::string("sequence: ") + what + " length mismatch");
  }
  for (const auto& f : frames) {
    if (f.size() != dim) {
      throw std::invalid_argument(std::string("sequence: ") + what + " dimension mismatch");
    }
    for (double v : f) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument(std::string("sequence: non-finite value in ") + what);
      }
    }
  }
}

}  // namespace

void LatentSequence::validate(int num_labels) const {
  if (frames.empty()) throw std::invalid_argument("sequence '" + id + "' has no frames");
  if (labels.size() != frames.size()) {
    throw std::invalid_argument("sequence '" + id + "': labels and frames differ in length");
  }
  const auto d = frames.front().size();
  if (d == 0) throw std::invalid_argument("sequence '" + id + "': zero-dimensional frames");
  check_frames(frames, frames.size(), d, "frames");
  if (has_zc2()) check_frames(zc2, frames.size(), d, "zc2");
  if (has_h()) check_frames(h, frames.size(), d, "h");
  for (int label : labels) {
    if (label < 0 || (num_labels > 0 && label >= num_labels)) {
      throw std::invalid_argument("sequence '" + id + "': label " + std::to_string(label) +
                                  " outside vocabulary");
    }
  }
}

std::size_t Dataset::num_frames() const {
  std::size_t n = 0;
  for (const auto& seq : sequences) n += seq.size();
  return n;
}

void Dataset::validate() const {
  if (dim < 1) throw std::invalid_argument("dataset: dim must be >= 1");
  if (num_labels < 1) throw std::invalid_argument("dataset: labels must be >= 1");
  for (const auto& seq : sequences) {
    seq.validate(num_labels);
    if (seq.dim() != dim) {
      throw std::invalid_argument("sequence '" + seq.id + "': dimension " +
                                  std::to_string(seq.dim()) + " differs from header dim " +
                                  std::to_string(dim));
    }
  }
}

Standardizer::Standardizer(std::vector<double> mean, std::vector<double> std)
    : mean_(std::move(mean)), std_(std::move(std)) {
  if (mean_.size() != std_.size() || mean_.empty()) {
    throw std::invalid_argument("standardizer: mean/std size mismatch");
  }
  for (double s : std_) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("standardizer: std must be strictly positive");
    }
  }
}

Standardizer Standardizer::identity(int dim) {
  return Standardizer(std::vector<double>(static_cast<std::size_t>(dim), 0.0),
                      std::vector<double>(static_cast<std::size_t>(dim), 1.0));
}

void Standardizer::check_dim(std::size_t n) const {
  if (n != mean_.size()) {
    throw std::invalid_argument("standardizer: dimension mismatch (" + std::to_string(n) +
                                " vs " + std::to_string(mean_.size()) + ")");
  }
}

Frame Standardizer::standardize(std::span<const double> x) const {
  check_dim(x.size());
  Frame out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean_[i]) / std_[i];
  return out;
}

Frame Standardizer::destandardize(std::span<const double> z) const {
  check_dim(z.size());
  Frame out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] * std_[i] + mean_[i];
  return out;
}

Standardizer fit_standardizer(std::span<const Frame> frames) {
  if (frames.size() < 2) {
    throw std::invalid_argument("fit_standardizer: need at least 2 frames");
  }
  const std::size_t d = frames.front().size();
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (const auto& f : frames) {
    if (f.size() != d) throw std::invalid_argument("fit_standardizer: dimension mismatch");
    for (std::size_t i = 0; i < d; ++i) mean[i] += f[i];
  }
  const double n = static_cast<double>(frames.size());
  for (auto& m : mean) m /= n;
  for (const auto& f : frames) {
    for (std::size_t i = 0; i < d; ++i) {
      const double c = f[i] - mean[i];
      var[i] += c * c;
    }
  }
  std::vector<double> std(d);
  for (std::size_t i = 0; i < d; ++i) {
    std[i] = std::sqrt(var[i] / n);
    if (!(std[i] > 0.0)) {
      throw std::invalid_argument("fit_standardizer: zero variance in dimension " +
                                  std::to_string(i));
    }
  }
  return Standardizer(std::move(mean), std::move(std));
}

Standardizer fit_standardizer(std::span<const LatentSequence> dataset) {
  std::vector<Frame> all;
  for (const auto& seq : dataset) all.insert(all.end(), seq.frames.begin(), seq.frames.end());
  return fit_standardizer(std::span<const Frame>(all));
}

LatentSequence standardize(const LatentSequence& seq, const Standardizer& s) {
  LatentSequence out = seq;
  for (auto& f : out.frames) f = s.standardize(f);
  return out;
}

LatentSequence destandardize(const LatentSequence& seq, const Standardizer& s) {
  LatentSequence out = seq;
  for (auto& f : out.frames) f = s.destandardize(f);
  return out;
}

Codebook::Codebook(std::vector<Frame> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw std::invalid_argument("codebook: needs at least one entry");
  const auto d = entries_.front().size();
  if (d == 0) throw std::invalid_argument("codebook: zero-dimensional entries");
  std::set<Frame> seen;
  for (const auto& e : entries_) {
    if (e.size() != d) throw std::invalid_argument("codebook: mixed entry dimensions");
    if (!seen.insert(e).second) throw std::invalid_argument("codebook: duplicate entry");
  }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return na == nb ? 1.0 : 0.0;
  return dot / std::sqrt(na * nb);
}

SnapResult snap_to_codebook(std::span<const double> frame, const Codebook& codebook) {
  if (codebook.size() == 0) throw std::invalid_argument("snap_to_codebook: empty codebook");
  if (static_cast<int>(frame.size()) != codebook.dim()) {
    throw std::invalid_argument("snap_to_codebook: dimension mismatch");
  }
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < codebook.size(); ++i) {
    const double dist = squared_distance(frame, codebook[i]);
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return {best, codebook[best]};
}

std::vector<int> upsample_nearest(const LabelTrack& track, std::size_t target_len) {
  if (track.labels.empty()) throw std::invalid_argument("upsample_nearest: empty track");
  if (target_len == 0) throw std::invalid_argument("upsample_nearest: target_len must be >= 1");
  const std::size_t src = track.labels.size();
  std::vector<int> out(target_len);
  for (std::size_t i = 0; i < target_len; ++i) {
    // floor((i + 0.5) * L / F) in exact integer arithmetic.
    out[i] = track.labels[((2 * i + 1) * src) / (2 * target_len)];
  }
  return out;
}

}  // namespace priorshift
