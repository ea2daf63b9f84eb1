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
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "pqcxpr/gates.hpp"

namespace pqcxpr {

using Complex = std::complex<double>;

/// Dense statevector of an n-qubit register, qubit 0 being the least
/// significant bit of the amplitude index. Gate application mutates in place
/// with stride-based pair arithmetic; no matrices are materialized.
class StateVector {
 public:
  static constexpr int kMaxQubits = 18;

  explicit StateVector(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits)
      throw std::invalid_argument("StateVector: n_qubits out of range 1..18");
    amp_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
    amp_[0] = Complex{1.0, 0.0};
  }

  int n_qubits() const { return n_qubits_; }
  std::size_t size() const { return amp_.size(); }
  const std::vector<Complex>& amplitudes() const { return amp_; }
  std::vector<Complex>& amplitudes() { return amp_; }
  Complex operator[](std::size_t i) const { return amp_[i]; }

  void reset() {
    std::fill(amp_.begin(), amp_.end(), Complex{0.0, 0.0});
    amp_[0] = Complex{1.0, 0.0};
  }

  double norm_sq() const {
    double s = 0.0;
    for (const Complex& a : amp_) s += std::norm(a);
    return s;
  }

  /// Applies a gate; `angle` must be the fully resolved rotation angle for
  /// parameterized kinds and is ignored (must be 0) otherwise. FRZ resolves its
  /// own fixed angle.
  void apply(const GateOp& g, double angle = 0.0) {
    check_index(g.target);
    if (is_controlled(g.kind)) {
      check_index(g.control);
      if (g.control == g.target)
        throw std::invalid_argument("gate: control equals target");
    }
    switch (g.kind) {
      case GateKind::RX: apply_rx(g.target, angle); break;
      case GateKind::RY: apply_ry(g.target, angle); break;
      case GateKind::RZ: apply_rz(g.target, angle); break;
      case GateKind::FRZ: apply_rz(g.target, g.fixed_angle); break;
      case GateKind::H: apply_h(g.target); break;
      case GateKind::CNOT: apply_cnot(g.control, g.target); break;
      case GateKind::CZ: apply_cz(g.control, g.target); break;
      case GateKind::CRX: apply_crx(g.control, g.target, angle); break;
      case GateKind::CRY: apply_cry(g.control, g.target, angle); break;
      case GateKind::CRZ: apply_crz(g.control, g.target, angle); break;
    }
  }

  void apply_rx(int t, double theta) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    pair_loop(t, [&](Complex& a0, Complex& a1) {
      const Complex x = c * a0 + Complex{0, -s} * a1;
      const Complex y = Complex{0, -s} * a0 + c * a1;
      a0 = x;
      a1 = y;
    });
  }

  void apply_ry(int t, double theta) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    pair_loop(t, [&](Complex& a0, Complex& a1) {
      const Complex x = c * a0 - s * a1;
      const Complex y = s * a0 + c * a1;
      a0 = x;
      a1 = y;
    });
  }

  void apply_rz(int t, double theta) {
    const Complex p0{std::cos(theta / 2), -std::sin(theta / 2)};
    const Complex p1 = std::conj(p0);
    pair_loop(t, [&](Complex& a0, Complex& a1) {
      a0 *= p0;
      a1 *= p1;
    });
  }

  void apply_h(int t) {
    constexpr double inv_sqrt2 = 0.7071067811865475244008443621048490393;
    pair_loop(t, [&](Complex& a0, Complex& a1) {
      const Complex x = inv_sqrt2 * (a0 + a1);
      const Complex y = inv_sqrt2 * (a0 - a1);
      a0 = x;
      a1 = y;
    });
  }

  void apply_cnot(int c, int t) {
    const std::size_t cm = std::size_t{1} << c;
    pair_loop(t, cm, [&](Complex& a0, Complex& a1) { std::swap(a0, a1); });
  }

  void apply_cz(int c, int t) {
    const std::size_t cm = std::size_t{1} << c;
    pair_loop(t, cm, [&](Complex&, Complex& a1) { a1 = -a1; });
  }

  void apply_crx(int c, int t, double theta) {
    const double cc = std::cos(theta / 2), s = std::sin(theta / 2);
    const std::size_t cm = std::size_t{1} << c;
    pair_loop(t, cm, [&](Complex& a0, Complex& a1) {
      const Complex x = cc * a0 + Complex{0, -s} * a1;
      const Complex y = Complex{0, -s} * a0 + cc * a1;
      a0 = x;
      a1 = y;
    });
  }

  void apply_cry(int c, int t, double theta) {
    const double cc = std::cos(theta / 2), s = std::sin(theta / 2);
    const std::size_t cm = std::size_t{1} << c;
    pair_loop(t, cm, [&](Complex& a0, Complex& a1) {
      const Complex x = cc * a0 - s * a1;
      const Complex y = s * a0 + cc * a1;
      a0 = x;
      a1 = y;
    });
  }

  void apply_crz(int c, int t, double theta) {
    const Complex p0{std::cos(theta / 2), -std::sin(theta / 2)};
    const Complex p1 = std::conj(p0);
    const std::size_t cm = std::size_t{1} << c;
    pair_loop(t, cm, [&](Complex& a0, Complex& a1) {
      a0 *= p0;
      a1 *= p1;
    });
  }

 private:
  void check_index(int q) const {
    if (q < 0 || q >= n_qubits_)
      throw std::out_of_range("gate: qubit index out of range");
  }

  // Visits each (i, i|2^t) pair with target bit clear in i.
  template <typename F>
  void pair_loop(int t, F&& f) {
    const std::size_t tm = std::size_t{1} << t;
    const std::size_t n = amp_.size();
    for (std::size_t lo = 0; lo < n; lo += 2 * tm) {
      for (std::size_t i = lo; i < lo + tm; ++i) f(amp_[i], amp_[i + tm]);
    }
  }

  // Same but restricted to indices with the control bit set.
  template <typename F>
  void pair_loop(int t, std::size_t cm, F&& f) {
    const std::size_t tm = std::size_t{1} << t;
    const std::size_t n = amp_.size();
    for (std::size_t lo = 0; lo < n; lo += 2 * tm) {
      for (std::size_t i = lo; i < lo + tm; ++i) {
        if (i & cm) f(amp_[i], amp_[i + tm]);
      }
    }
  }

  int n_qubits_;
  std::vector<Complex> amp_;
};

/// Squared overlap |<a|b>|^2, clamped to [0,1] against rounding.
inline double fidelity(const StateVector& a, const StateVector& b) {
  if (a.n_qubits() != b.n_qubits())
    throw std::invalid_argument("fidelity: dimension mismatch");
  Complex inner{0.0, 0.0};
  const auto& va = a.amplitudes();
  const auto& vb = b.amplitudes();
  for (std::size_t i = 0; i < va.size(); ++i) inner += std::conj(va[i]) * vb[i];
  return std::clamp(std::norm(inner), 0.0, 1.0);
}

}  // namespace pqcxpr
