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

#include <doctest.h>

#include <cmath>

#include "pqcxpr/shap.hpp"

using namespace pqcxpr;

namespace {

GBTModel single_tree_model(Tree tree, int n_features, double lr = 1.0,
                           double base = 0.0) {
  GBTModel model;
  model.base_score = base;
  model.params.learning_rate = lr;
  model.n_features = n_features;
  model.trees.push_back(std::move(tree));
  return model;
}

/// Depth-1 stump: x[feature] <= threshold -> left value, else right value.
Tree stump(int feature, double threshold, double left_value, double right_value,
           double left_cover, double right_cover) {
  Tree t;
  TreeNode root;
  root.feature = feature;
  root.threshold = threshold;
  root.left = 1;
  root.right = 2;
  root.cover = left_cover + right_cover;
  TreeNode l, r;
  l.value = left_value;
  l.cover = left_cover;
  r.value = right_value;
  r.cover = right_cover;
  t.nodes = {root, l, r};
  return t;
}

void training_data(std::size_t n, std::size_t p, std::uint64_t seed,
                   std::vector<std::vector<double>>& x, std::vector<double>& y) {
  SplitMix64 gen(seed);
  x.assign(n, std::vector<double>(p));
  y.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : x[i]) v = gen.next_double();
    y[i] = std::sin(4.0 * x[i][0]) - 2.0 * x[i][1 % p];
    if (p > 2) y[i] += x[i][2] * x[i][0];
  }
}

}  // namespace

TEST_CASE("single-leaf trees contribute no attribution") {
  Tree leaf;
  TreeNode n;
  n.value = 2.5;
  n.cover = 10.0;
  leaf.nodes = {n};
  const GBTModel model = single_tree_model(leaf, 3, 0.1, 1.0);
  const ShapExplanation ex = tree_shap(model, std::vector<double>{0.1, 0.2, 0.3});
  for (double p : ex.phi) CHECK(p == 0.0);
  CHECK(ex.base_value == doctest::Approx(1.0 + 0.1 * 2.5).epsilon(1e-15));
  CHECK(ex.total() == doctest::Approx(model.predict(std::vector<double>{0.1, 0.2, 0.3})));
}

TEST_CASE("depth-1 stump: phi is the gap between the leaf and the cover mean") {
  // 30 of 40 training rows went left (value 1), 10 right (value 5)
  const GBTModel model = single_tree_model(stump(0, 0.5, 1.0, 5.0, 30, 10), 2, 1.0, 0.0);
  const double expected_mean = (30.0 * 1.0 + 10.0 * 5.0) / 40.0;  // 2.0

  const ShapExplanation left = tree_shap(model, std::vector<double>{0.2, 0.9});
  CHECK(left.base_value == doctest::Approx(expected_mean).epsilon(1e-12));
  CHECK(left.phi[0] == doctest::Approx(1.0 - expected_mean).epsilon(1e-12));
  CHECK(left.phi[1] == 0.0);

  const ShapExplanation right = tree_shap(model, std::vector<double>{0.8, 0.9});
  CHECK(right.phi[0] == doctest::Approx(5.0 - expected_mean).epsilon(1e-12));
  CHECK(right.phi[1] == 0.0);
}

TEST_CASE("symmetric two-feature tree splits credit equally") {
  // depth-2 tree: root on feature 0, both children split on feature 1, with
  // equal covers and leaf values that depend symmetrically on both features
  Tree t;
  TreeNode root;
  root.feature = 0;
  root.threshold = 0.5;
  root.left = 1;
  root.right = 2;
  root.cover = 4.0;
  TreeNode a, b;
  a.feature = 1;
  a.threshold = 0.5;
  a.left = 3;
  a.right = 4;
  a.cover = 2.0;
  b.feature = 1;
  b.threshold = 0.5;
  b.left = 5;
  b.right = 6;
  b.cover = 2.0;
  auto leaf = [](double v) {
    TreeNode n;
    n.value = v;
    n.cover = 1.0;
    return n;
  };
  // value = [x0 > .5] + [x1 > .5], an additive symmetric function
  t.nodes = {root, a, b, leaf(0.0), leaf(1.0), leaf(1.0), leaf(2.0)};
  const GBTModel model = single_tree_model(t, 2);
  const ShapExplanation ex = tree_shap(model, std::vector<double>{0.9, 0.9});
  CHECK(ex.base_value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ex.phi[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ex.phi[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ex.total() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("a feature absent from every split gets exactly zero") {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  training_data(100, 2, 3, x, y);
  for (auto& row : x) row.push_back(0.77);  // constant third column
  GBTParams params;
  params.rounds = 30;
  const GBTModel model = fit_gbt(x, y, params);
  for (const Tree& t : model.trees)
    for (const TreeNode& n : t.nodes) CHECK(n.feature != 2);
  const ShapExplanation ex = tree_shap(model, x[0]);
  CHECK(ex.phi[2] == 0.0);
}

TEST_CASE("tree_shap matches brute-force Shapley on trained ensembles") {
  for (std::uint64_t seed : {1ULL, 2ULL}) {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    training_data(120, 4, seed, x, y);
    GBTParams params;
    params.rounds = 25;
    params.max_leaves = 8;
    const GBTModel model = fit_gbt(x, y, params);
    for (std::size_t i = 0; i < 15; ++i) {
      const ShapExplanation fast = tree_shap(model, x[i]);
      const ShapExplanation slow = brute_force_shap(model, x[i]);
      CHECK(std::abs(fast.base_value - slow.base_value) < 1e-10);
      for (std::size_t j = 0; j < 4; ++j)
        CHECK(std::abs(fast.phi[j] - slow.phi[j]) < 1e-10);
    }
  }
}

TEST_CASE("local accuracy: attributions sum to the prediction") {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  training_data(150, 3, 7, x, y);
  GBTParams params;
  params.rounds = 60;
  const GBTModel model = fit_gbt(x, y, params);
  for (std::size_t i = 0; i < x.size(); i += 11) {
    const ShapExplanation ex = tree_shap(model, x[i]);
    CHECK(std::abs(ex.total() - model.predict(x[i])) < 1e-9);
  }
}

TEST_CASE("repeated splits on one feature are handled (duplicate path entries)") {
  // depth-2 chain splitting twice on feature 0
  Tree t;
  TreeNode root;
  root.feature = 0;
  root.threshold = 0.5;
  root.left = 1;
  root.right = 2;
  root.cover = 10.0;
  TreeNode inner;
  inner.feature = 0;
  inner.threshold = 0.25;
  inner.left = 3;
  inner.right = 4;
  inner.cover = 6.0;
  auto leaf = [](double v, double c) {
    TreeNode n;
    n.value = v;
    n.cover = c;
    return n;
  };
  t.nodes = {root, inner, leaf(9.0, 4.0), leaf(1.0, 2.0), leaf(3.0, 4.0)};
  const GBTModel model = single_tree_model(t, 2);
  for (double v : {0.1, 0.4, 0.8}) {
    const std::vector<double> x = {v, 0.5};
    const ShapExplanation fast = tree_shap(model, x);
    const ShapExplanation slow = brute_force_shap(model, x);
    CHECK(fast.phi[0] == doctest::Approx(slow.phi[0]).epsilon(1e-12));
    CHECK(fast.phi[1] == 0.0);
    CHECK(std::abs(fast.total() - model.predict(x)) < 1e-12);
  }
}

TEST_CASE("conditional expectation endpoints") {
  const GBTModel model = single_tree_model(stump(0, 0.5, 1.0, 5.0, 30, 10), 1);
  const std::vector<double> x = {0.2};
  // empty subset: cover-weighted mean; full subset: the model output
  CHECK(shap_detail::conditional_expectation(model.trees[0], x, 0u, 0) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(shap_detail::conditional_expectation(model.trees[0], x, 1u, 0) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("input validation") {
  const GBTModel model = single_tree_model(stump(0, 0.5, 1.0, 5.0, 3, 1), 2);
  CHECK_THROWS_AS(tree_shap(model, std::vector<double>{0.1}), std::invalid_argument);
  CHECK_THROWS_AS(brute_force_shap(model, std::vector<double>{0.1, 0.2, 0.3}),
                  std::invalid_argument);
  GBTModel wide = model;
  wide.n_features = 13;
  CHECK_THROWS_AS(brute_force_shap(wide, std::vector<double>(13, 0.0)),
                  std::invalid_argument);
  GBTModel no_cover = single_tree_model(stump(0, 0.5, 1.0, 5.0, 0, 0), 2);
  CHECK_THROWS_AS(tree_shap(no_cover, std::vector<double>{0.1, 0.2}),
                  std::invalid_argument);
}

TEST_CASE("shap summary aggregates mean phi and mean absolute phi") {
  ShapExplanation e1, e2;
  e1.phi = {1.0, -2.0};
  e2.phi = {-3.0, 2.0};
  const std::vector<std::vector<double>> scaled = {{0.1, 0.2}, {0.3, 0.4}};
  const std::vector<std::vector<double>> raw = {{10.0, 20.0}, {30.0, 40.0}};
  const ShapSummary s = shap_summary({e1, e2}, scaled, raw);
  CHECK(s.n_features == 2);
  CHECK(s.mean_abs_phi[0] == doctest::Approx(2.0));
  CHECK(s.mean_abs_phi[1] == doctest::Approx(2.0));
  CHECK(s.mean_phi[0] == doctest::Approx(-1.0));
  CHECK(s.mean_phi[1] == doctest::Approx(0.0));
  REQUIRE(s.points[0].size() == 2);
  CHECK(s.points[0][1][0] == 0.3);
  CHECK(s.points[0][1][1] == 30.0);
  CHECK(s.points[0][1][2] == -3.0);
  CHECK_THROWS_AS(shap_summary({}, {}, {}), std::invalid_argument);
}
