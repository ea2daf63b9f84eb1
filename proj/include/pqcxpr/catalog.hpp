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
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pqcxpr/circuit.hpp"
#include "pqcxpr/default_catalog.hpp"
#include "pqcxpr/gates.hpp"

namespace pqcxpr {

class CatalogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BlockKind { SingleQubitLayer, EntanglingPattern };

/// One structural unit of a template: either a single-qubit gate layer over a
/// qubit subset, or a two-qubit gate pattern over a pair list derived from n.
struct Block {
  BlockKind kind;
  GateKind gate;
  std::string pattern;  // layer: all | inner; entangle: chain | ring | ring_alt
                        // | all_to_all | pairs_even | pairs_odd
};

struct CircuitTemplate {
  int id = 0;
  std::string description;
  std::vector<Block> blocks;
};

using Catalog = std::vector<CircuitTemplate>;

namespace detail {

inline const std::set<std::string>& layer_patterns() {
  static const std::set<std::string> p = {"all", "inner"};
  return p;
}

inline const std::set<std::string>& entangle_patterns() {
  static const std::set<std::string> p = {"chain",      "ring",       "ring_alt",
                                          "all_to_all", "pairs_even", "pairs_odd"};
  return p;
}

inline std::vector<int> layer_qubits(const std::string& pattern, int n) {
  std::vector<int> qs;
  if (pattern == "all") {
    for (int q = 0; q < n; ++q) qs.push_back(q);
  } else {  // inner
    for (int q = 1; q < n - 1; ++q) qs.push_back(q);
  }
  return qs;
}

// (control, target) pairs for each entangling pattern, deterministic order.
inline std::vector<std::pair<int, int>> entangle_pairs(const std::string& pattern,
                                                       int n) {
  std::vector<std::pair<int, int>> ps;
  if (pattern == "chain") {
    for (int t = n - 2; t >= 0; --t) ps.emplace_back(t + 1, t);
  } else if (pattern == "ring") {
    for (int c = n - 1; c >= 0; --c) ps.emplace_back(c, (c + 1) % n);
  } else if (pattern == "ring_alt") {
    for (int c = 0; c < n; ++c) ps.emplace_back(c, (c - 1 + n) % n);
  } else if (pattern == "all_to_all") {
    for (int c = n - 1; c >= 0; --c)
      for (int t = n - 1; t >= 0; --t)
        if (t != c) ps.emplace_back(c, t);
  } else if (pattern == "pairs_even") {
    for (int t = 0; t + 1 < n; t += 2) ps.emplace_back(t + 1, t);
  } else if (pattern == "pairs_odd") {
    for (int t = 1; t + 1 < n; t += 2) ps.emplace_back(t + 1, t);
  }
  return ps;
}

}  // namespace detail

inline Catalog parse_catalog(const std::string& text, const std::string& origin) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CatalogError(origin + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("templates") || !doc["templates"].is_array())
    throw CatalogError(origin + ": expected top-level object with 'templates' array");
  Catalog catalog;
  std::set<int> seen_ids;
  for (const auto& jt : doc["templates"]) {
    CircuitTemplate t;
    if (!jt.contains("id") || !jt["id"].is_number_integer())
      throw CatalogError(origin + ": template missing integer 'id'");
    t.id = jt["id"].get<int>();
    if (!seen_ids.insert(t.id).second)
      throw CatalogError(origin + ": duplicate template id " + std::to_string(t.id));
    t.description = jt.value("description", std::string{});
    if (!jt.contains("blocks") || !jt["blocks"].is_array() || jt["blocks"].empty())
      throw CatalogError(origin + ": template " + std::to_string(t.id) +
                         " has no blocks");
    for (const auto& jb : jt["blocks"]) {
      Block b;
      const std::string kind = jb.value("kind", std::string{});
      if (kind == "layer") {
        b.kind = BlockKind::SingleQubitLayer;
      } else if (kind == "entangle") {
        b.kind = BlockKind::EntanglingPattern;
      } else {
        throw CatalogError(origin + ": template " + std::to_string(t.id) +
                           ": unknown block kind '" + kind + "'");
      }
      try {
        b.gate = parse_gate_kind(jb.value("gate", std::string{}));
      } catch (const std::invalid_argument& e) {
        throw CatalogError(origin + ": template " + std::to_string(t.id) + ": " +
                           e.what());
      }
      b.pattern = jb.value("pattern", std::string{});
      if (b.kind == BlockKind::SingleQubitLayer) {
        if (is_controlled(b.gate))
          throw CatalogError(origin + ": template " + std::to_string(t.id) +
                             ": layer block with 2-qubit gate");
        if (!detail::layer_patterns().count(b.pattern))
          throw CatalogError(origin + ": template " + std::to_string(t.id) +
                             ": unknown layer pattern '" + b.pattern + "'");
      } else {
        if (!is_controlled(b.gate))
          throw CatalogError(origin + ": template " + std::to_string(t.id) +
                             ": entangle block with 1-qubit gate");
        if (!detail::entangle_patterns().count(b.pattern))
          throw CatalogError(origin + ": template " + std::to_string(t.id) +
                             ": unknown entangle pattern '" + b.pattern + "'");
      }
      t.blocks.push_back(std::move(b));
    }
    catalog.push_back(std::move(t));
  }
  if (catalog.empty()) throw CatalogError(origin + ": no templates");
  return catalog;
}

inline Catalog load_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CatalogError(path + ": cannot open catalog file");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw CatalogError(path + ": no templates");
  return parse_catalog(text, path);
}

/// The catalog compiled into the binary (identical to data/catalog.json).
inline const Catalog& default_catalog() {
  static const Catalog catalog = parse_catalog(kDefaultCatalogJson, "<builtin>");
  return catalog;
}

inline const CircuitTemplate& find_template(const Catalog& catalog, int id) {
  for (const auto& t : catalog)
    if (t.id == id) return t;
  throw CatalogError("unknown template id " + std::to_string(id));
}

/// Expands a template at (n_qubits, n_layers): the whole block sequence is
/// repeated n_layers times, with fresh parameter slots per repetition. Gate
/// order is deterministic (block order, ascending qubit within a layer, fixed
/// pair order within a pattern).
inline CircuitInstance instantiate(const CircuitTemplate& tmpl, int n_qubits,
                                   int n_layers) {
  if (n_qubits < 2) throw std::invalid_argument("instantiate: n_qubits < 2");
  if (n_layers < 1) throw std::invalid_argument("instantiate: n_layers < 1");
  CircuitInstance inst;
  inst.template_id = tmpl.id;
  inst.n_qubits = n_qubits;
  inst.n_layers = n_layers;
  int slot = 0;
  for (int layer = 0; layer < n_layers; ++layer) {
    for (const Block& b : tmpl.blocks) {
      if (b.kind == BlockKind::SingleQubitLayer) {
        for (int q : detail::layer_qubits(b.pattern, n_qubits)) {
          if (is_parameterized(b.gate)) {
            inst.gates.push_back(GateOp::single(b.gate, q, slot++));
          } else if (b.gate == GateKind::H) {
            inst.gates.push_back(GateOp::hadamard(q));
          } else {
            throw CatalogError("unsupported layer gate in template " +
                               std::to_string(tmpl.id));
          }
        }
      } else {
        for (auto [c, t] : detail::entangle_pairs(b.pattern, n_qubits)) {
          switch (b.gate) {
            case GateKind::CNOT: inst.gates.push_back(GateOp::cnot(c, t)); break;
            case GateKind::CZ: inst.gates.push_back(GateOp::cz(c, t)); break;
            case GateKind::CRX:
            case GateKind::CRY:
            case GateKind::CRZ:
              inst.gates.push_back(
                  GateOp::controlled_rotation(b.gate, c, t, slot++));
              break;
            default:
              throw CatalogError("unsupported entangle gate in template " +
                                 std::to_string(tmpl.id));
          }
        }
      }
    }
  }
  inst.n_params = slot;
  return inst;
}

/// Rewrites controlled rotations into the elementary set. CRY/CRZ become a
/// half-angle rotation conjugated through CNOTs; CRX additionally needs the
/// fixed +-pi/2 z-rotations that turn the RY pair into an X-axis rotation.
/// Sub-gates share the parent's parameter slot with +-1/2 angle multipliers,
/// so the parameter space is unchanged.
inline CircuitInstance decompose(const CircuitInstance& in) {
  constexpr double half_pi = std::numbers::pi / 2;
  CircuitInstance out;
  out.template_id = in.template_id;
  out.n_qubits = in.n_qubits;
  out.n_layers = in.n_layers;
  out.n_params = in.n_params;
  for (const GateOp& g : in.gates) {
    const double s = g.angle_scale;
    switch (g.kind) {
      case GateKind::CRZ:
        out.gates.push_back(GateOp::single(GateKind::RZ, g.target, g.param_slot, s / 2));
        out.gates.push_back(GateOp::cnot(g.control, g.target));
        out.gates.push_back(GateOp::single(GateKind::RZ, g.target, g.param_slot, -s / 2));
        out.gates.push_back(GateOp::cnot(g.control, g.target));
        break;
      case GateKind::CRY:
        out.gates.push_back(GateOp::single(GateKind::RY, g.target, g.param_slot, s / 2));
        out.gates.push_back(GateOp::cnot(g.control, g.target));
        out.gates.push_back(GateOp::single(GateKind::RY, g.target, g.param_slot, -s / 2));
        out.gates.push_back(GateOp::cnot(g.control, g.target));
        break;
      case GateKind::CRX:
        out.gates.push_back(GateOp::frz(g.target, half_pi));
        out.gates.push_back(GateOp::single(GateKind::RY, g.target, g.param_slot, s / 2));
        out.gates.push_back(GateOp::cnot(g.control, g.target));
        out.gates.push_back(GateOp::single(GateKind::RY, g.target, g.param_slot, -s / 2));
        out.gates.push_back(GateOp::cnot(g.control, g.target));
        out.gates.push_back(GateOp::frz(g.target, -half_pi));
        break;
      default:
        out.gates.push_back(g);
        break;
    }
  }
  return out;
}

/// Per-kind gate tally, indexed in kAllGateKinds order.
struct GateCountVector {
  std::array<long, 10> counts{};

  long& operator[](GateKind k) { return counts[static_cast<std::size_t>(k)]; }
  long operator[](GateKind k) const { return counts[static_cast<std::size_t>(k)]; }
  long total() const {
    long s = 0;
    for (long c : counts) s += c;
    return s;
  }
  GateCountVector& operator+=(const GateCountVector& rhs) {
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += rhs.counts[i];
    return *this;
  }
  bool operator==(const GateCountVector&) const = default;
};

inline GateCountVector gate_counts(const CircuitInstance& inst) {
  GateCountVector v;
  for (const GateOp& g : inst.gates) ++v[g.kind];
  return v;
}

inline int param_count(const CircuitInstance& inst) { return inst.n_params; }

}  // namespace pqcxpr
