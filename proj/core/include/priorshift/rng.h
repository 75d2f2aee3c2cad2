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

#include <array>
#include <cstdint>

namespace priorshift {

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
// easy as 1, 2, 3", SC'11). Counter words first, then the two key words.
std::array<uint32_t, 4> philox4x32_10(std::array<uint32_t, 4> counter,
                                      std::array<uint32_t, 2> key);

// Every random draw in the engine is addressed by (seed, stream, position).
// The 64-bit seed is the Philox key; the 128-bit counter is
// (position_lo, position_hi, stream_lo, stream_hi). Each block yields two
// 64-bit words, consumed in order.
//
// Streams are partitioned by domain in the top byte, so per-frame draws can
// be addressed directly by frame index regardless of thread count.
enum class StreamDomain : uint64_t {
  kGeneric = 0,
  kWorld = 1,
  kDataset = 2,
  kCorruption = 3,
  kTrainInit = 4,
  kTrainShuffle = 5,
  kTrainSample = 6,
  kDropout = 7,
  kHeldOut = 8,
  kVerify = 9,
};

constexpr uint64_t stream_id(StreamDomain domain, uint64_t index) {
  return (static_cast<uint64_t>(domain) << 56) ^ (index & 0x00FFFFFFFFFFFFFFull);
}

class CounterRng {
 public:
  CounterRng(uint64_t seed, uint64_t stream);
  CounterRng(uint64_t seed, StreamDomain domain, uint64_t index)
      : CounterRng(seed, stream_id(domain, index)) {}

  uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1).
  double uniform_open();
  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  // Uniform integer in [0, n), unbiased (rejection). n must be positive.
  uint64_t uniform_int(uint64_t n);

  uint64_t seed() const { return seed_; }
  uint64_t stream() const { return stream_; }

 private:
  void refill();

  uint64_t seed_;
  uint64_t stream_;
  uint64_t position_ = 0;
  std::array<uint64_t, 2> block_{};
  int block_used_ = 2;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace priorshift
