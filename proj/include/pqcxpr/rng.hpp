// Copyright 2026 The pqcxpr Authors.
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

#include <cstdint>
#include <numbers>

namespace pqcxpr {

// Counter-based stream: every draw is a pure hash of its counters, so results
// are independent of evaluation order and worker count. The mixer is the
// splitmix64 finalizer applied to a running state absorbed field by field.

namespace rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

inline std::uint64_t absorb(std::uint64_t state, std::uint64_t field) {
  return mix64(state + kGolden + field);
}

inline double to_unit_double(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

}  // namespace rng

/// Identifies one repetition's sampling stream within the key hierarchy
/// (master_seed, template_id, n_qubits, n_layers, repetition).
struct StreamKey {
  std::uint64_t master_seed = 0;
  int template_id = 0;
  int n_qubits = 0;
  int n_layers = 0;
  int repetition = 0;

  std::uint64_t state() const {
    std::uint64_t s = rng::mix64(master_seed ^ rng::kGolden);
    s = rng::absorb(s, static_cast<std::uint64_t>(template_id));
    s = rng::absorb(s, static_cast<std::uint64_t>(n_qubits));
    s = rng::absorb(s, static_cast<std::uint64_t>(n_layers));
    s = rng::absorb(s, static_cast<std::uint64_t>(repetition));
    return s;
  }
};

/// Uniform angle on [0, 2*pi) for one parameter coordinate of one side
/// (0 = theta, 1 = phi) of one sampled circuit pair.
inline double uniform_angle(std::uint64_t stream_state, std::uint64_t pair_index,
                            int side, int param_index) {
  std::uint64_t s = rng::absorb(stream_state, pair_index);
  s = rng::absorb(s, static_cast<std::uint64_t>(side));
  s = rng::absorb(s, static_cast<std::uint64_t>(param_index));
  return 2.0 * std::numbers::pi * rng::to_unit_double(s);
}

/// Small deterministic sequential generator for utility shuffles and synthetic
/// test data; not used on the sampling hot path.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += rng::kGolden;
    return rng::mix64(state_);
  }
  double next_double() { return rng::to_unit_double(next()); }
  /// Uniform integer in [0, bound) by rejection-free scaling (bound << 2^64).
  std::uint64_t next_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(next_double() * static_cast<double>(bound));
  }

 private:
  std::uint64_t state_;
};

}  // namespace pqcxpr
