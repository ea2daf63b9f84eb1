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
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pqcxpr/rng.hpp"

namespace pqcxpr {

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Uniform random split without replacement; test size is floor(fraction * n).
/// Hand-rolled Fisher-Yates so the split is identical across platforms.
inline SplitIndices train_test_split(std::size_t n_rows, double test_fraction,
                                     std::uint64_t seed) {
  if (test_fraction <= 0.0 || test_fraction >= 1.0)
    throw std::invalid_argument("train_test_split: fraction must be in (0,1)");
  const auto n_test =
      static_cast<std::size_t>(test_fraction * static_cast<double>(n_rows));
  if (n_test == 0 || n_test == n_rows)
    throw std::invalid_argument("train_test_split: degenerate split size");
  std::vector<std::size_t> idx(n_rows);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  SplitMix64 gen(seed);
  for (std::size_t i = n_rows - 1; i > 0; --i) {
    const std::size_t j = gen.next_below(i + 1);
    std::swap(idx[i], idx[j]);
  }
  SplitIndices s;
  s.test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  return s;
}

/// Coefficient of determination 1 - SS_res / SS_tot.
inline double r2_score(const std::vector<double>& predictions,
                       const std::vector<double>& truth) {
  if (predictions.size() != truth.size() || truth.size() < 2)
    throw std::invalid_argument("r2: length mismatch or too few points");
  double mean = 0.0;
  for (double t : truth) mean += t;
  mean /= static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - predictions[i]) * (truth[i] - predictions[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot == 0.0) throw std::invalid_argument("r2: constant truth");
  return 1.0 - ss_res / ss_tot;
}

inline double mse(const std::vector<double>& predictions,
                  const std::vector<double>& truth) {
  if (predictions.size() != truth.size() || truth.empty())
    throw std::invalid_argument("mse: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    s += (truth[i] - predictions[i]) * (truth[i] - predictions[i]);
  return s / static_cast<double>(truth.size());
}

}  // namespace pqcxpr
