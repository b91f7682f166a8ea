/* Copyright 2026 The rgpnet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef RGP_RNG_HPP_
#define RGP_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace rgp {

/// PCG32 generator. Two u64 words of state, trivially checkpointable, and the
/// stream is identical across platforms for a given seed.
class Pcg32 {
 public:
  explicit Pcg32(uint64_t seed = 0x853c49e6748fea9bULL) { reseed(seed); }

  void reseed(uint64_t seed) {
    state_ = 0;
    inc_ = (seed << 1u) | 1u;
    next_u32();
    state_ += 0x9e3779b97f4a7c15ULL + seed;
    next_u32();
  }

  uint32_t next_u32() {
    uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    uint32_t rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  /// Uniform double in [0, 1).
  double next_double() {
    return next_u32() * (1.0 / 4294967296.0);
  }

  float next_float() { return static_cast<float>(next_double()); }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Uniform integer in [0, n). n must be positive.
  int64_t next_below(int64_t n) {
    return static_cast<int64_t>(next_double() * static_cast<double>(n));
  }

  bool bernoulli(double p) { return next_double() < p; }

  /// Standard normal via Box-Muller. No cached spare, so the generator state
  /// alone captures the sequence position.
  double next_normal() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 1e-12) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  uint64_t state() const { return state_; }
  uint64_t inc() const { return inc_; }
  void restore(uint64_t state, uint64_t inc) {
    state_ = state;
    inc_ = inc;
  }

 private:
  uint64_t state_ = 0;
  uint64_t inc_ = 0;
};

}  // namespace rgp

#endif  // RGP_RNG_HPP_
