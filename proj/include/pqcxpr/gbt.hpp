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
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pqcxpr/dataset.hpp"

namespace pqcxpr {

/// Regression tree node; internal nodes route x[feature] <= threshold left.
/// cover is the number of training samples that reached the node.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output
  double cover = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // node 0 is the root

  double predict(std::span<const double> x) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const TreeNode& n = nodes[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }

  /// Cover-weighted expected output (no features conditioned).
  double expectation() const { return expectation_at(0); }

  double expectation_at(int node) const {
    const TreeNode& n = nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) return n.value;
    const double cl = nodes[static_cast<std::size_t>(n.left)].cover;
    const double cr = nodes[static_cast<std::size_t>(n.right)].cover;
    return (cl * expectation_at(n.left) + cr * expectation_at(n.right)) / (cl + cr);
  }
};

struct GBTParams {
  int rounds = 200;
  double learning_rate = 0.1;
  int max_leaves = 31;
  int min_samples_leaf = 5;
};

struct GBTModel {
  double base_score = 0.0;  // mean of training targets
  GBTParams params;
  std::vector<Tree> trees;
  FeatureScaling scaling;  // of the features the model was trained on
  int n_features = 0;

  double predict(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != n_features)
      throw std::invalid_argument("predict: feature arity mismatch");
    double y = base_score;
    for (const Tree& t : trees) y += params.learning_rate * t.predict(x);
    return y;
  }
};

namespace gbt_detail {

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

/// Exact greedy split search minimizing squared error. Ties broken toward the
/// lowest feature index, then the lowest threshold (strictly-better gain
/// required to replace), which keeps training deterministic.
inline SplitCandidate best_split(const std::vector<std::vector<double>>& x,
                                 const std::vector<double>& residual,
                                 const std::vector<std::size_t>& samples,
                                 int n_features, int min_samples_leaf) {
  SplitCandidate best;
  const auto n = samples.size();
  if (n < 2 * static_cast<std::size_t>(min_samples_leaf)) return best;
  double total = 0.0;
  for (std::size_t i : samples) total += residual[i];
  std::vector<std::size_t> order(samples);
  for (int f = 0; f < n_features; ++f) {
    const auto sf = static_cast<std::size_t>(f);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (x[a][sf] != x[b][sf]) return x[a][sf] < x[b][sf];
      return a < b;
    });
    double left_sum = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      left_sum += residual[order[k]];
      const double xv = x[order[k]][sf];
      const double xn = x[order[k + 1]][sf];
      if (xv == xn) continue;
      const auto nl = static_cast<double>(k + 1);
      const auto nr = static_cast<double>(n - k - 1);
      if (nl < min_samples_leaf || nr < min_samples_leaf) continue;
      const double right_sum = total - left_sum;
      const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr -
                          total * total / static_cast<double>(n);
      if (gain > best.gain + 1e-12) {
        best.gain = gain;
        best.feature = f;
        best.threshold = xv + (xn - xv) / 2;
      }
    }
  }
  return best;
}

}  // namespace gbt_detail

/// Fits one regression tree to the residuals by leaf-wise (best-gain-first)
/// growth up to max_leaves.
inline Tree fit_tree(const std::vector<std::vector<double>>& x,
                     const std::vector<double>& residual,
                     const std::vector<std::size_t>& samples, int n_features,
                     const GBTParams& params) {
  struct Leaf {
    int node;
    std::vector<std::size_t> samples;
    gbt_detail::SplitCandidate split;
  };
  Tree tree;
  auto make_leaf_node = [&](const std::vector<std::size_t>& s) {
    double sum = 0.0;
    for (std::size_t i : s) sum += residual[i];
    TreeNode n;
    n.value = sum / static_cast<double>(s.size());
    n.cover = static_cast<double>(s.size());
    tree.nodes.push_back(n);
    return static_cast<int>(tree.nodes.size()) - 1;
  };

  std::vector<Leaf> open;
  {
    Leaf root{make_leaf_node(samples), samples, {}};
    root.split = gbt_detail::best_split(x, residual, root.samples, n_features,
                                        params.min_samples_leaf);
    open.push_back(std::move(root));
  }
  int n_leaves = 1;
  while (n_leaves < params.max_leaves) {
    // Earliest-created leaf wins gain ties, keeping growth deterministic.
    std::size_t pick = open.size();
    double best_gain = 0.0;
    for (std::size_t i = 0; i < open.size(); ++i) {
      if (open[i].split.feature >= 0 && open[i].split.gain > best_gain + 1e-12) {
        best_gain = open[i].split.gain;
        pick = i;
      }
    }
    if (pick == open.size()) break;
    Leaf leaf = std::move(open[pick]);
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));

    std::vector<std::size_t> ls, rs;
    const auto sf = static_cast<std::size_t>(leaf.split.feature);
    for (std::size_t i : leaf.samples)
      (x[i][sf] <= leaf.split.threshold ? ls : rs).push_back(i);

    Leaf lchild{make_leaf_node(ls), std::move(ls), {}};
    Leaf rchild{make_leaf_node(rs), std::move(rs), {}};
    TreeNode& parent = tree.nodes[static_cast<std::size_t>(leaf.node)];
    parent.feature = leaf.split.feature;
    parent.threshold = leaf.split.threshold;
    parent.left = lchild.node;
    parent.right = rchild.node;
    parent.value = 0.0;

    lchild.split = gbt_detail::best_split(x, residual, lchild.samples, n_features,
                                          params.min_samples_leaf);
    rchild.split = gbt_detail::best_split(x, residual, rchild.samples, n_features,
                                          params.min_samples_leaf);
    open.push_back(std::move(lchild));
    open.push_back(std::move(rchild));
    ++n_leaves;
  }
  return tree;
}

/// Stagewise least-squares boosting: each round fits an exact greedy tree to
/// the current residuals and the predictions advance by learning_rate times
/// the tree output.
inline GBTModel fit_gbt(const std::vector<std::vector<double>>& x,
                        const std::vector<double>& y, const GBTParams& params,
                        const FeatureScaling& scaling = {}) {
  if (x.empty() || x.size() != y.size())
    throw std::invalid_argument("fit_gbt: empty or mismatched data");
  const int n_features = static_cast<int>(x[0].size());
  for (const auto& row : x)
    if (static_cast<int>(row.size()) != n_features)
      throw std::invalid_argument("fit_gbt: ragged feature rows");
  for (double v : y)
    if (!std::isfinite(v)) throw std::invalid_argument("fit_gbt: non-finite target");
  for (const auto& row : x)
    for (double v : row)
      if (!std::isfinite(v))
        throw std::invalid_argument("fit_gbt: non-finite feature");
  if (static_cast<int>(x.size()) < params.min_samples_leaf)
    throw std::invalid_argument("fit_gbt: insufficient data");

  GBTModel model;
  model.params = params;
  model.scaling = scaling;
  model.n_features = n_features;
  double mean = 0.0;
  for (double v : y) mean += v;
  model.base_score = mean / static_cast<double>(y.size());

  std::vector<double> residual(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) residual[i] = y[i] - model.base_score;
  std::vector<std::size_t> all(x.size());
  std::iota(all.begin(), all.end(), std::size_t{0});

  for (int round = 0; round < params.rounds; ++round) {
    Tree tree = fit_tree(x, residual, all, n_features, params);
    for (std::size_t i = 0; i < x.size(); ++i)
      residual[i] -= params.learning_rate * tree.predict(x[i]);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

inline double training_mse_after_rounds(const GBTModel& model,
                                        const std::vector<std::vector<double>>& x,
                                        const std::vector<double>& y,
                                        std::size_t rounds) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double p = model.base_score;
    for (std::size_t t = 0; t < rounds && t < model.trees.size(); ++t)
      p += model.params.learning_rate * model.trees[t].predict(x[i]);
    s += (y[i] - p) * (y[i] - p);
  }
  return s / static_cast<double>(x.size());
}

// --- model serialization (structured text) ---

inline void save_gbt(const GBTModel& model, std::ostream& out) {
  out << "pqcxpr-gbt v1\n";
  out << std::setprecision(17);
  out << "n_features " << model.n_features << '\n';
  out << "base_score " << model.base_score << '\n';
  out << "learning_rate " << model.params.learning_rate << '\n';
  out << "rounds " << model.params.rounds << '\n';
  out << "max_leaves " << model.params.max_leaves << '\n';
  out << "min_samples_leaf " << model.params.min_samples_leaf << '\n';
  out << "scaling";
  for (int j = 0; j < 6; ++j)
    out << ' ' << model.scaling.min[static_cast<std::size_t>(j)] << ' '
        << model.scaling.max[static_cast<std::size_t>(j)] << ' '
        << (model.scaling.constant[static_cast<std::size_t>(j)] ? 1 : 0);
  out << '\n';
  out << "trees " << model.trees.size() << '\n';
  for (const Tree& t : model.trees) {
    out << "tree " << t.nodes.size() << '\n';
    for (const TreeNode& n : t.nodes) {
      if (n.is_leaf())
        out << "leaf " << n.value << ' ' << n.cover << '\n';
      else
        out << "split " << n.feature << ' ' << n.threshold << ' ' << n.left << ' '
            << n.right << ' ' << n.cover << '\n';
    }
  }
}

inline void save_gbt(const GBTModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  save_gbt(model, out);
}

inline GBTModel load_gbt(std::istream& in) {
  auto fail = [](const std::string& what) -> GBTModel {
    throw std::runtime_error("gbt model: malformed file (" + what + ")");
  };
  std::string line;
  while (std::getline(in, line) && !line.empty() && line[0] == '#') continue;
  if (line != "pqcxpr-gbt v1") fail("magic");
  GBTModel model;
  std::string key;
  std::size_t n_trees = 0;
  while (in >> key) {
    if (key == "n_features") {
      in >> model.n_features;
    } else if (key == "base_score") {
      in >> model.base_score;
    } else if (key == "learning_rate") {
      in >> model.params.learning_rate;
    } else if (key == "rounds") {
      in >> model.params.rounds;
    } else if (key == "max_leaves") {
      in >> model.params.max_leaves;
    } else if (key == "min_samples_leaf") {
      in >> model.params.min_samples_leaf;
    } else if (key == "scaling") {
      for (int j = 0; j < 6; ++j) {
        int c = 0;
        in >> model.scaling.min[static_cast<std::size_t>(j)] >>
            model.scaling.max[static_cast<std::size_t>(j)] >> c;
        model.scaling.constant[static_cast<std::size_t>(j)] = c != 0;
      }
    } else if (key == "trees") {
      in >> n_trees;
      break;
    } else {
      fail("unknown key " + key);
    }
  }
  if (!in) fail("header");
  for (std::size_t t = 0; t < n_trees; ++t) {
    std::size_t n_nodes = 0;
    if (!(in >> key) || key != "tree" || !(in >> n_nodes)) fail("tree header");
    Tree tree;
    for (std::size_t i = 0; i < n_nodes; ++i) {
      if (!(in >> key)) fail("node");
      TreeNode n;
      if (key == "leaf") {
        in >> n.value >> n.cover;
      } else if (key == "split") {
        in >> n.feature >> n.threshold >> n.left >> n.right >> n.cover;
      } else {
        fail("node kind " + key);
      }
      tree.nodes.push_back(n);
    }
    model.trees.push_back(std::move(tree));
  }
  if (!in) fail("truncated");
  return model;
}

inline GBTModel load_gbt(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open model file");
  return load_gbt(in);
}

}  // namespace pqcxpr
