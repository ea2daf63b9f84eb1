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
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "pqcxpr/gbt.hpp"

namespace pqcxpr {

/// Additive attribution of one prediction: base_value + sum(phi) equals the
/// model output (local accuracy).
struct ShapExplanation {
  double base_value = 0.0;
  std::vector<double> phi;

  double total() const {
    double s = base_value;
    for (double p : phi) s += p;
    return s;
  }
};

namespace shap_detail {

struct PathElement {
  int feature_index = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

inline void extend_path(std::vector<PathElement>& path, unsigned depth,
                        double zero_fraction, double one_fraction,
                        int feature_index) {
  path[depth] = {feature_index, zero_fraction, one_fraction,
                 depth == 0 ? 1.0 : 0.0};
  for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
    const auto iu = static_cast<unsigned>(i);
    path[iu + 1].pweight +=
        one_fraction * path[iu].pweight * (i + 1.0) / (depth + 1.0);
    path[iu].pweight =
        zero_fraction * path[iu].pweight * (depth - iu) / (depth + 1.0);
  }
}

inline void unwind_path(std::vector<PathElement>& path, unsigned depth,
                        unsigned index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
    const auto iu = static_cast<unsigned>(i);
    if (one_fraction != 0.0) {
      const double tmp = path[iu].pweight;
      path[iu].pweight =
          next_one_portion * (depth + 1.0) / ((i + 1.0) * one_fraction);
      next_one_portion =
          tmp - path[iu].pweight * zero_fraction * (depth - iu) / (depth + 1.0);
    } else {
      path[iu].pweight =
          path[iu].pweight * (depth + 1.0) / (zero_fraction * (depth - iu));
    }
  }
  for (unsigned i = index; i < depth; ++i) {
    path[i].feature_index = path[i + 1].feature_index;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

inline double unwound_path_sum(const std::vector<PathElement>& path,
                               unsigned depth, unsigned index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  double total = 0.0;
  for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
    const auto iu = static_cast<unsigned>(i);
    if (one_fraction != 0.0) {
      const double tmp =
          next_one_portion * (depth + 1.0) / ((i + 1.0) * one_fraction);
      total += tmp;
      next_one_portion =
          path[iu].pweight - tmp * zero_fraction * (depth - iu) / (depth + 1.0);
    } else {
      total += path[iu].pweight / zero_fraction * (depth + 1.0) / (depth - iu);
    }
  }
  return total;
}

inline void tree_shap_recurse(const Tree& tree, std::span<const double> x,
                              std::vector<double>& phi, int node,
                              std::vector<PathElement> path, unsigned depth,
                              double parent_zero_fraction,
                              double parent_one_fraction,
                              int parent_feature_index) {
  if (path.size() < depth + 1) path.resize(depth + 1);
  extend_path(path, depth, parent_zero_fraction, parent_one_fraction,
              parent_feature_index);
  const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
  if (n.is_leaf()) {
    for (unsigned i = 1; i <= depth; ++i) {
      const double w = unwound_path_sum(path, depth, i);
      phi[static_cast<std::size_t>(path[i].feature_index)] +=
          w * (path[i].one_fraction - path[i].zero_fraction) * n.value;
    }
    return;
  }
  if (n.cover <= 0.0)
    throw std::invalid_argument("tree_shap: node without cover data");
  const bool go_left = x[static_cast<std::size_t>(n.feature)] <= n.threshold;
  const int hot = go_left ? n.left : n.right;
  const int cold = go_left ? n.right : n.left;
  const double hot_zero =
      tree.nodes[static_cast<std::size_t>(hot)].cover / n.cover;
  const double cold_zero =
      tree.nodes[static_cast<std::size_t>(cold)].cover / n.cover;

  double incoming_zero = 1.0;
  double incoming_one = 1.0;
  unsigned prev = 0;
  for (; prev <= depth; ++prev)
    if (path[prev].feature_index == n.feature) break;
  if (prev <= depth) {
    incoming_zero = path[prev].zero_fraction;
    incoming_one = path[prev].one_fraction;
    unwind_path(path, depth, prev);
    --depth;
  }
  tree_shap_recurse(tree, x, phi, hot, path, depth + 1,
                    hot_zero * incoming_zero, incoming_one, n.feature);
  tree_shap_recurse(tree, x, phi, cold, path, depth + 1,
                    cold_zero * incoming_zero, 0.0, n.feature);
}

/// Path-dependent conditional expectation: features in `subset` are routed by
/// x, absent features average children by cover. Shared by the brute-force
/// oracle so the tree_shap equivalence is well defined.
inline double conditional_expectation(const Tree& tree, std::span<const double> x,
                                      std::uint32_t subset, int node) {
  const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
  if (n.is_leaf()) return n.value;
  if (subset & (std::uint32_t{1} << n.feature)) {
    const int next =
        x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    return conditional_expectation(tree, x, subset, next);
  }
  const double cl = tree.nodes[static_cast<std::size_t>(n.left)].cover;
  const double cr = tree.nodes[static_cast<std::size_t>(n.right)].cover;
  if (cl + cr <= 0.0)
    throw std::invalid_argument("shap: node without cover data");
  return (cl * conditional_expectation(tree, x, subset, n.left) +
          cr * conditional_expectation(tree, x, subset, n.right)) /
         (cl + cr);
}

}  // namespace shap_detail

/// Exact TreeSHAP (path-dependent) for the boosted ensemble; per-tree phi are
/// scaled by the learning rate and summed. base_value is the cover-weighted
/// expected model output.
inline ShapExplanation tree_shap(const GBTModel& model, std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.n_features)
    throw std::invalid_argument("tree_shap: feature arity mismatch");
  ShapExplanation ex;
  ex.phi.assign(static_cast<std::size_t>(model.n_features), 0.0);
  ex.base_value = model.base_score;
  std::vector<double> tree_phi(static_cast<std::size_t>(model.n_features));
  for (const Tree& tree : model.trees) {
    std::fill(tree_phi.begin(), tree_phi.end(), 0.0);
    if (!tree.nodes[0].is_leaf()) {
      shap_detail::tree_shap_recurse(tree, x, tree_phi, 0, {}, 0, 1.0, 1.0, -1);
    }
    for (std::size_t j = 0; j < tree_phi.size(); ++j)
      ex.phi[j] += model.params.learning_rate * tree_phi[j];
    ex.base_value += model.params.learning_rate * tree.expectation();
  }
  return ex;
}

/// Direct Shapley-value evaluation by subset enumeration; test oracle only.
inline ShapExplanation brute_force_shap(const GBTModel& model,
                                        std::span<const double> x) {
  const int m = model.n_features;
  if (static_cast<int>(x.size()) != m)
    throw std::invalid_argument("brute_force_shap: feature arity mismatch");
  if (m > 12) throw std::invalid_argument("brute_force_shap: more than 12 features");

  auto value_of = [&](std::uint32_t subset) {
    double v = model.base_score;
    for (const Tree& t : model.trees)
      v += model.params.learning_rate *
           shap_detail::conditional_expectation(t, x, subset, 0);
    return v;
  };

  std::vector<double> factorial(static_cast<std::size_t>(m) + 1, 1.0);
  for (std::size_t k = 1; k < factorial.size(); ++k)
    factorial[k] = factorial[k - 1] * static_cast<double>(k);

  const std::uint32_t n_subsets = std::uint32_t{1} << m;
  std::vector<double> values(n_subsets);
  for (std::uint32_t s = 0; s < n_subsets; ++s) values[s] = value_of(s);

  ShapExplanation ex;
  ex.base_value = values[0];
  ex.phi.assign(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < m; ++i) {
    const std::uint32_t bit = std::uint32_t{1} << i;
    double phi = 0.0;
    for (std::uint32_t s = 0; s < n_subsets; ++s) {
      if (s & bit) continue;
      const int size = std::popcount(s);
      const double weight = factorial[static_cast<std::size_t>(size)] *
                            factorial[static_cast<std::size_t>(m - size - 1)] /
                            factorial[static_cast<std::size_t>(m)];
      phi += weight * (values[s | bit] - values[s]);
    }
    ex.phi[static_cast<std::size_t>(i)] = phi;
  }
  return ex;
}

/// Per-feature aggregates plus the raw (value, phi) pairs behind the beeswarm
/// and dependence exports.
struct ShapSummary {
  int n_features = 0;
  std::vector<double> mean_abs_phi;
  std::vector<double> mean_phi;
  // per feature, per instance: (normalized feature value, raw count, phi)
  std::vector<std::vector<std::array<double, 3>>> points;
};

inline ShapSummary shap_summary(const std::vector<ShapExplanation>& explanations,
                                const std::vector<std::vector<double>>& scaled_values,
                                const std::vector<std::vector<double>>& raw_values) {
  if (explanations.empty())
    throw std::invalid_argument("shap_summary: no explanations");
  ShapSummary s;
  s.n_features = static_cast<int>(explanations[0].phi.size());
  const auto m = static_cast<std::size_t>(s.n_features);
  s.mean_abs_phi.assign(m, 0.0);
  s.mean_phi.assign(m, 0.0);
  s.points.assign(m, {});
  for (std::size_t i = 0; i < explanations.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double phi = explanations[i].phi[j];
      s.mean_abs_phi[j] += std::abs(phi);
      s.mean_phi[j] += phi;
      s.points[j].push_back({scaled_values[i][j], raw_values[i][j], phi});
    }
  }
  const auto n = static_cast<double>(explanations.size());
  for (std::size_t j = 0; j < m; ++j) {
    s.mean_abs_phi[j] /= n;
    s.mean_phi[j] /= n;
  }
  return s;
}

}  // namespace pqcxpr
