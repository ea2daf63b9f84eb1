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

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pqcxpr {

/// Gate vocabulary. The first seven kinds are the elementary set a circuit is
/// reduced to; CRX/CRY/CRZ only appear before decomposition.
enum class GateKind : std::uint8_t { RX, RY, RZ, FRZ, H, CNOT, CZ, CRX, CRY, CRZ };

inline constexpr std::array<GateKind, 10> kAllGateKinds = {
    GateKind::RX,  GateKind::RY,   GateKind::RZ,  GateKind::FRZ, GateKind::H,
    GateKind::CNOT, GateKind::CZ,  GateKind::CRX, GateKind::CRY, GateKind::CRZ};

constexpr bool is_controlled(GateKind k) {
  return k == GateKind::CNOT || k == GateKind::CZ || k == GateKind::CRX ||
         k == GateKind::CRY || k == GateKind::CRZ;
}

/// True for gates whose angle comes from a trainable parameter slot.
constexpr bool is_parameterized(GateKind k) {
  return k == GateKind::RX || k == GateKind::RY || k == GateKind::RZ ||
         k == GateKind::CRX || k == GateKind::CRY || k == GateKind::CRZ;
}

constexpr bool is_controlled_rotation(GateKind k) {
  return k == GateKind::CRX || k == GateKind::CRY || k == GateKind::CRZ;
}

constexpr std::string_view gate_name(GateKind k) {
  switch (k) {
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::FRZ: return "FRZ";
    case GateKind::H: return "H";
    case GateKind::CNOT: return "CNOT";
    case GateKind::CZ: return "CZ";
    case GateKind::CRX: return "CRX";
    case GateKind::CRY: return "CRY";
    case GateKind::CRZ: return "CRZ";
  }
  return "?";
}

inline GateKind parse_gate_kind(std::string_view name) {
  for (GateKind k : kAllGateKinds) {
    if (gate_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown gate kind: " + std::string(name));
}

/// One gate in a flattened circuit. Parameterized gates reference a parameter
/// slot and scale the slot's angle by angle_scale (decomposition introduces
/// half-angle children sharing the parent slot). FRZ carries a fixed angle.
struct GateOp {
  GateKind kind;
  int target = 0;
  int control = -1;        // >= 0 iff kind is controlled
  int param_slot = -1;     // >= 0 iff kind is parameterized
  double angle_scale = 1.0;
  double fixed_angle = 0.0;  // FRZ only

  static GateOp single(GateKind k, int target, int slot, double scale = 1.0) {
    return GateOp{k, target, -1, slot, scale, 0.0};
  }
  static GateOp frz(int target, double angle) {
    return GateOp{GateKind::FRZ, target, -1, -1, 1.0, angle};
  }
  static GateOp hadamard(int target) {
    return GateOp{GateKind::H, target, -1, -1, 1.0, 0.0};
  }
  static GateOp cnot(int control, int target) {
    return GateOp{GateKind::CNOT, target, control, -1, 1.0, 0.0};
  }
  static GateOp cz(int control, int target) {
    return GateOp{GateKind::CZ, target, control, -1, 1.0, 0.0};
  }
  static GateOp controlled_rotation(GateKind k, int control, int target, int slot,
                                    double scale = 1.0) {
    return GateOp{k, target, control, slot, scale, 0.0};
  }
};

}  // namespace pqcxpr
