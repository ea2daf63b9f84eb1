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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "pqcxpr/circuit.hpp"
#include "pqcxpr/rng.hpp"

namespace pqcxpr {

struct SamplingConfig {
  int n_pairs = 20000;     // S
  int n_bins = 75;         // B
  int n_repetitions = 10;  // R
  std::uint64_t master_seed = 0;

  void validate() const {
    if (n_pairs < 1) throw std::invalid_argument("config: n_pairs < 1");
    if (n_bins < 2) throw std::invalid_argument("config: n_bins < 2");
    if (n_repetitions < 1) throw std::invalid_argument("config: n_repetitions < 1");
  }
};

struct ExpressibilityEstimate {
  double mean_kl = 0.0;
  double std_kl = 0.0;  // population std over repetitions
  std::vector<double> per_repetition;
  SamplingConfig config;
};

/// Probability mass the Haar fidelity law P(F) = (N-1)(1-F)^(N-2) assigns to
/// bin `bin_index` of a uniform B-bin partition of [0,1]. The CDF telescopes,
/// so the mass is (1-a)^(N-1) - (1-b)^(N-1); evaluated via log1p so the tail
/// underflows to zero gracefully rather than producing NaN at N = 2^18.
inline double haar_bin_mass(int n_qubits, int bin_index, int n_bins) {
  if (n_qubits < 1) throw std::invalid_argument("haar_bin_mass: n_qubits < 1");
  if (bin_index < 0 || bin_index >= n_bins)
    throw std::out_of_range("haar_bin_mass: bin index out of range");
  const double exponent = std::pow(2.0, n_qubits) - 1.0;  // N - 1
  const double a = static_cast<double>(bin_index) / n_bins;
  const double b = static_cast<double>(bin_index + 1) / n_bins;
  const double upper = std::exp(exponent * std::log1p(-a));
  const double lower =
      bin_index + 1 == n_bins ? 0.0 : std::exp(exponent * std::log1p(-b));
  return upper - lower;
}

inline std::vector<double> haar_bin_masses(int n_qubits, int n_bins) {
  std::vector<double> q(static_cast<std::size_t>(n_bins));
  for (int i = 0; i < n_bins; ++i)
    q[static_cast<std::size_t>(i)] = haar_bin_mass(n_qubits, i, n_bins);
  return q;
}

/// Normalized fidelity histogram over a uniform partition of [0,1]; the last
/// bin is right-closed so F = 1 lands in bin B-1.
struct FidelityHistogram {
  std::vector<double> bin_probabilities;
  long sample_count = 0;

  static int bin_of(double fidelity, int n_bins) {
    int b = static_cast<int>(fidelity * n_bins);
    if (b >= n_bins) b = n_bins - 1;
    if (b < 0) b = 0;
    return b;
  }

  static FidelityHistogram from_counts(const std::vector<long>& counts) {
    FidelityHistogram h;
    h.bin_probabilities.resize(counts.size());
    for (long c : counts) h.sample_count += c;
    for (std::size_t i = 0; i < counts.size(); ++i)
      h.bin_probabilities[i] =
          static_cast<double>(counts[i]) / static_cast<double>(h.sample_count);
    return h;
  }

  static FidelityHistogram from_samples(const std::vector<double>& fidelities,
                                        int n_bins) {
    std::vector<long> counts(static_cast<std::size_t>(n_bins), 0);
    for (double f : fidelities)
      ++counts[static_cast<std::size_t>(bin_of(f, n_bins))];
    return from_counts(counts);
  }
};

/// D_KL(p || q) in nats with the 0*ln(0) = 0 convention; q entries are clamped
/// to 1e-300 so empty Haar tails give a large finite value instead of inf.
inline double kl_divergence(const FidelityHistogram& p, const std::vector<double>& q) {
  if (p.bin_probabilities.size() != q.size())
    throw std::invalid_argument("kl_divergence: bin count mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double pi = p.bin_probabilities[i];
    if (pi > 0.0) kl += pi * std::log(pi / std::max(q[i], 1e-300));
  }
  return kl;
}

namespace detail {

inline void require_decomposed(const CircuitInstance& inst) {
  if (!inst.is_decomposed())
    throw std::invalid_argument(
        "instance contains controlled rotations; decompose it first");
}

inline double pair_fidelity(const CircuitInstance& inst, std::uint64_t stream,
                            std::uint64_t pair_index, std::vector<double>& theta,
                            std::vector<double>& phi, StateVector& a,
                            StateVector& b) {
  for (int k = 0; k < inst.n_params; ++k) {
    theta[static_cast<std::size_t>(k)] = uniform_angle(stream, pair_index, 0, k);
    phi[static_cast<std::size_t>(k)] = uniform_angle(stream, pair_index, 1, k);
  }
  run_circuit_into(inst, theta, a);
  run_circuit_into(inst, phi, b);
  return fidelity(a, b);
}

/// Runs fn(begin, end) over [0, total) split across up to n_threads workers.
template <typename F>
void parallel_ranges(std::uint64_t total, int n_threads, F&& fn) {
  if (n_threads < 1) n_threads = 1;
  const std::uint64_t want =
      std::min<std::uint64_t>(static_cast<std::uint64_t>(n_threads), total ? total : 1);
  if (want <= 1) {
    fn(std::uint64_t{0}, total);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(want);
  const std::uint64_t chunk = (total + want - 1) / want;
  for (std::uint64_t w = 0; w < want; ++w) {
    const std::uint64_t begin = w * chunk;
    const std::uint64_t end = std::min(total, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : workers) t.join();
}

}  // namespace detail

/// Draws n_pairs (theta, phi) pairs uniform on [0, 2*pi)^d and returns the
/// fidelities |<psi_phi|psi_theta>|^2. Deterministic per stream key.
inline std::vector<double> sample_fidelities(const CircuitInstance& inst,
                                             int n_pairs, const StreamKey& key,
                                             int n_threads = 1) {
  detail::require_decomposed(inst);
  const std::uint64_t stream = key.state();
  std::vector<double> out(static_cast<std::size_t>(n_pairs));
  detail::parallel_ranges(
      static_cast<std::uint64_t>(n_pairs), n_threads,
      [&](std::uint64_t begin, std::uint64_t end) {
        std::vector<double> theta(static_cast<std::size_t>(inst.n_params));
        std::vector<double> phi(static_cast<std::size_t>(inst.n_params));
        StateVector a(inst.n_qubits), b(inst.n_qubits);
        for (std::uint64_t i = begin; i < end; ++i)
          out[i] = detail::pair_fidelity(inst, stream, i, theta, phi, a, b);
      });
  return out;
}

/// One repetition: S sampled fidelities -> histogram -> KL against Haar.
inline double kl_for_repetition(const CircuitInstance& inst,
                                const SamplingConfig& config, int repetition,
                                const std::vector<double>& haar_masses,
                                int n_threads) {
  const StreamKey key{config.master_seed, inst.template_id, inst.n_qubits,
                      inst.n_layers, repetition};
  const std::uint64_t stream = key.state();
  const std::size_t n_bins = haar_masses.size();
  std::vector<long> counts(n_bins, 0);
  std::mutex merge_mutex;
  detail::parallel_ranges(
      static_cast<std::uint64_t>(config.n_pairs), n_threads,
      [&](std::uint64_t begin, std::uint64_t end) {
        std::vector<long> local(n_bins, 0);
        std::vector<double> theta(static_cast<std::size_t>(inst.n_params));
        std::vector<double> phi(static_cast<std::size_t>(inst.n_params));
        StateVector a(inst.n_qubits), b(inst.n_qubits);
        for (std::uint64_t i = begin; i < end; ++i) {
          const double f =
              detail::pair_fidelity(inst, stream, i, theta, phi, a, b);
          ++local[static_cast<std::size_t>(
              FidelityHistogram::bin_of(f, static_cast<int>(n_bins)))];
        }
        const std::lock_guard<std::mutex> lock(merge_mutex);
        for (std::size_t i = 0; i < n_bins; ++i) counts[i] += local[i];
      });
  return kl_divergence(FidelityHistogram::from_counts(counts), haar_masses);
}

/// R repetitions of S-pair KL estimation; mean and population std across
/// repetitions. Bitwise deterministic for a given (instance, config),
/// independent of n_threads: integer histogram merges commute and every angle
/// is a pure function of its counters.
inline ExpressibilityEstimate estimate_expressibility(const CircuitInstance& inst,
                                                      const SamplingConfig& config,
                                                      int n_threads = 1) {
  config.validate();
  detail::require_decomposed(inst);
  const std::vector<double> haar = haar_bin_masses(inst.n_qubits, config.n_bins);
  ExpressibilityEstimate est;
  est.config = config;
  est.per_repetition.resize(static_cast<std::size_t>(config.n_repetitions));
  for (int r = 0; r < config.n_repetitions; ++r)
    est.per_repetition[static_cast<std::size_t>(r)] =
        kl_for_repetition(inst, config, r, haar, n_threads);
  double sum = 0.0;
  for (double v : est.per_repetition) sum += v;
  est.mean_kl = sum / config.n_repetitions;
  // population variance via the pairwise identity Var = E[(X-X')^2]/2, which
  // is exactly zero for identical repetitions (no mean-rounding residue)
  double var = 0.0;
  for (double a : est.per_repetition)
    for (double b : est.per_repetition) var += (a - b) * (a - b);
  const auto r = static_cast<double>(config.n_repetitions);
  est.std_kl = std::sqrt(var / (2.0 * r * r));
  return est;
}

}  // namespace pqcxpr
