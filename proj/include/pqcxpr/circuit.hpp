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

#include <span>
#include <stdexcept>
#include <vector>

#include "pqcxpr/gates.hpp"
#include "pqcxpr/state_vector.hpp"

namespace pqcxpr {

/// Flattened gate list instantiated from a catalog template at a concrete
/// (n_qubits, n_layers). Immutable after construction.
struct CircuitInstance {
  int template_id = 0;
  int n_qubits = 0;
  int n_layers = 0;
  std::vector<GateOp> gates;
  int n_params = 0;

  bool is_decomposed() const {
    for (const GateOp& g : gates)
      if (is_controlled_rotation(g.kind)) return false;
    return true;
  }
};

inline double resolved_angle(const GateOp& g, std::span<const double> params) {
  if (g.param_slot < 0) return 0.0;
  return g.angle_scale * params[static_cast<std::size_t>(g.param_slot)];
}

/// U_C(params)|0...0> by sequential gate application in instance order.
inline StateVector run_circuit(const CircuitInstance& inst,
                               std::span<const double> params) {
  if (static_cast<int>(params.size()) != inst.n_params)
    throw std::invalid_argument("run_circuit: parameter count mismatch");
  StateVector state(inst.n_qubits);
  for (const GateOp& g : inst.gates) state.apply(g, resolved_angle(g, params));
  return state;
}

/// Re-runs a circuit into an existing state (avoids reallocation in sampling
/// loops). The state is reset to |0...0> first.
inline void run_circuit_into(const CircuitInstance& inst,
                             std::span<const double> params, StateVector& state) {
  if (static_cast<int>(params.size()) != inst.n_params)
    throw std::invalid_argument("run_circuit: parameter count mismatch");
  if (state.n_qubits() != inst.n_qubits)
    throw std::invalid_argument("run_circuit: state dimension mismatch");
  state.reset();
  for (const GateOp& g : inst.gates) state.apply(g, resolved_angle(g, params));
}

/// Column-major 2^n x 2^n unitary obtained by running the circuit on each
/// basis state. Verification oracle only; guarded at n_qubits <= 10.
class UnitaryMatrix {
 public:
  explicit UnitaryMatrix(std::size_t dim) : dim_(dim), data_(dim * dim) {}

  std::size_t dim() const { return dim_; }
  Complex& at(std::size_t row, std::size_t col) { return data_[col * dim_ + row]; }
  const Complex& at(std::size_t row, std::size_t col) const {
    return data_[col * dim_ + row];
  }

  UnitaryMatrix adjoint() const {
    UnitaryMatrix out(dim_);
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) out.at(c, r) = std::conj(at(r, c));
    return out;
  }

  UnitaryMatrix operator*(const UnitaryMatrix& rhs) const {
    UnitaryMatrix out(dim_);
    for (std::size_t c = 0; c < dim_; ++c)
      for (std::size_t k = 0; k < dim_; ++k) {
        const Complex v = rhs.at(k, c);
        for (std::size_t r = 0; r < dim_; ++r) out.at(r, c) += at(r, k) * v;
      }
    return out;
  }

 private:
  std::size_t dim_;
  std::vector<Complex> data_;
};

inline UnitaryMatrix circuit_unitary(const CircuitInstance& inst,
                                     std::span<const double> params) {
  if (inst.n_qubits > 10)
    throw std::invalid_argument("circuit_unitary: n_qubits > 10");
  if (static_cast<int>(params.size()) != inst.n_params)
    throw std::invalid_argument("circuit_unitary: parameter count mismatch");
  const std::size_t dim = std::size_t{1} << inst.n_qubits;
  UnitaryMatrix u(dim);
  StateVector state(inst.n_qubits);
  for (std::size_t col = 0; col < dim; ++col) {
    auto& amp = state.amplitudes();
    std::fill(amp.begin(), amp.end(), Complex{0.0, 0.0});
    amp[col] = Complex{1.0, 0.0};
    for (const GateOp& g : inst.gates) state.apply(g, resolved_angle(g, params));
    for (std::size_t row = 0; row < dim; ++row) u.at(row, col) = amp[row];
  }
  return u;
}

/// Max elementwise distance between two unitaries after aligning global phase
/// on the largest entry of `a`.
inline double unitary_distance_up_to_phase(const UnitaryMatrix& a,
                                           const UnitaryMatrix& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("unitary distance: dimension mismatch");
  std::size_t br = 0, bc = 0;
  double best = -1.0;
  for (std::size_t r = 0; r < a.dim(); ++r)
    for (std::size_t c = 0; c < a.dim(); ++c)
      if (std::abs(a.at(r, c)) > best) {
        best = std::abs(a.at(r, c));
        br = r;
        bc = c;
      }
  if (std::abs(b.at(br, bc)) == 0.0) return 2.0;
  Complex phase = a.at(br, bc) / b.at(br, bc);
  phase /= std::abs(phase);
  double max_err = 0.0;
  for (std::size_t r = 0; r < a.dim(); ++r)
    for (std::size_t c = 0; c < a.dim(); ++c)
      max_err = std::max(max_err, std::abs(a.at(r, c) - phase * b.at(r, c)));
  return max_err;
}

}  // namespace pqcxpr
