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

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pqcxpr/metrics.hpp"

namespace pqcxpr {

/// L1-regularized linear regression fit by cyclic coordinate descent with
/// soft-thresholding on standardized features. Objective:
///   (1/2n) * sum (y - b - Xs w)^2 + lambda * sum |w|
/// where Xs is the column-standardized design. Constant columns get zero
/// weight by convention.
struct LassoModel {
  double intercept = 0.0;            // in original y units
  std::vector<double> weights;       // on standardized features
  double lambda = 0.0;
  std::vector<double> feature_mean;  // standardization metadata
  std::vector<double> feature_std;   // 0 marks a constant column

  double predict(std::span<const double> x) const {
    if (x.size() != weights.size())
      throw std::invalid_argument("lasso predict: feature arity mismatch");
    double y = intercept;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      if (feature_std[j] == 0.0) continue;
      y += weights[j] * (x[j] - feature_mean[j]) / feature_std[j];
    }
    return y;
  }
};

namespace lasso_detail {

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace lasso_detail

inline LassoModel fit_lasso(const std::vector<std::vector<double>>& x,
                            const std::vector<double>& y, double lambda,
                            double tol = 1e-8, long max_sweeps = 200000) {
  if (x.empty() || x.size() != y.size())
    throw std::invalid_argument("fit_lasso: empty or mismatched data");
  const std::size_t n = x.size();
  const std::size_t p = x[0].size();
  for (const auto& row : x)
    if (row.size() != p) throw std::invalid_argument("fit_lasso: ragged rows");
  for (double v : y)
    if (!std::isfinite(v)) throw std::invalid_argument("fit_lasso: non-finite target");

  LassoModel model;
  model.lambda = lambda;
  model.feature_mean.assign(p, 0.0);
  model.feature_std.assign(p, 0.0);
  model.weights.assign(p, 0.0);

  for (std::size_t j = 0; j < p; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(x[i][j]))
        throw std::invalid_argument("fit_lasso: non-finite feature");
      m += x[i][j];
    }
    m /= static_cast<double>(n);
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v += (x[i][j] - m) * (x[i][j] - m);
    model.feature_mean[j] = m;
    model.feature_std[j] = std::sqrt(v / static_cast<double>(n));
  }

  // Standardized design; constant columns become all-zero and stay at w = 0.
  std::vector<std::vector<double>> xs(n, std::vector<double>(p, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j)
      if (model.feature_std[j] != 0.0)
        xs[i][j] = (x[i][j] - model.feature_mean[j]) / model.feature_std[j];

  double ymean = 0.0;
  for (double v : y) ymean += v;
  ymean /= static_cast<double>(n);
  model.intercept = ymean;  // columns are centered, so b stays at mean(y)

  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - ymean;

  for (long sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (model.feature_std[j] == 0.0) continue;
      double rho = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        rho += xs[i][j] * (residual[i] + xs[i][j] * model.weights[j]);
      rho /= static_cast<double>(n);
      // columns have unit variance, so the curvature term is 1
      const double w_new = lasso_detail::soft_threshold(rho, lambda);
      const double delta = w_new - model.weights[j];
      if (delta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) residual[i] -= delta * xs[i][j];
        model.weights[j] = w_new;
      }
      max_delta = std::max(max_delta, std::abs(delta));
    }
    if (max_delta < tol) break;
  }
  return model;
}

/// Lambda selection by 5-fold cross-validated MSE over a grid; ties go to the
/// largest lambda (stronger regularization).
inline LassoModel fit_lasso_cv(const std::vector<std::vector<double>>& x,
                               const std::vector<double>& y,
                               const std::vector<double>& lambda_grid,
                               std::uint64_t seed, int n_folds = 5) {
  if (lambda_grid.empty())
    throw std::invalid_argument("fit_lasso_cv: empty lambda grid");
  const std::size_t n = x.size();
  if (n < static_cast<std::size_t>(n_folds))
    throw std::invalid_argument("fit_lasso_cv: fewer rows than folds");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  SplitMix64 gen(seed);
  for (std::size_t i = n - 1; i > 0; --i)
    std::swap(idx[i], idx[gen.next_below(i + 1)]);

  double best_mse = std::numeric_limits<double>::infinity();
  double best_lambda = lambda_grid.front();
  for (double lambda : lambda_grid) {
    double fold_mse_sum = 0.0;
    for (int fold = 0; fold < n_folds; ++fold) {
      std::vector<std::vector<double>> xtr, xte;
      std::vector<double> ytr, yte;
      for (std::size_t k = 0; k < n; ++k) {
        const bool in_test = static_cast<int>(k % static_cast<std::size_t>(n_folds)) == fold;
        (in_test ? xte : xtr).push_back(x[idx[k]]);
        (in_test ? yte : ytr).push_back(y[idx[k]]);
      }
      const LassoModel m = fit_lasso(xtr, ytr, lambda);
      std::vector<double> pred;
      pred.reserve(xte.size());
      for (const auto& row : xte) pred.push_back(m.predict(row));
      fold_mse_sum += mse(pred, yte);
    }
    const double cv_mse = fold_mse_sum / n_folds;
    if (cv_mse < best_mse - 1e-15 ||
        (std::abs(cv_mse - best_mse) <= 1e-15 && lambda > best_lambda)) {
      best_mse = cv_mse;
      best_lambda = lambda;
    }
  }
  return fit_lasso(x, y, best_lambda);
}

inline void save_lasso(const LassoModel& model, std::ostream& out) {
  out << "pqcxpr-lasso v1\n" << std::setprecision(17);
  out << "lambda " << model.lambda << '\n';
  out << "intercept " << model.intercept << '\n';
  out << "features " << model.weights.size() << '\n';
  for (std::size_t j = 0; j < model.weights.size(); ++j)
    out << model.weights[j] << ' ' << model.feature_mean[j] << ' '
        << model.feature_std[j] << '\n';
}

inline void save_lasso(const LassoModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  save_lasso(model, out);
}

inline LassoModel load_lasso(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open model file");
  std::string line;
  while (std::getline(in, line) && !line.empty() && line[0] == '#') continue;
  if (line != "pqcxpr-lasso v1")
    throw std::runtime_error(path + ": malformed lasso model");
  LassoModel model;
  std::string key;
  std::size_t p = 0;
  in >> key >> model.lambda >> key >> model.intercept >> key >> p;
  model.weights.resize(p);
  model.feature_mean.resize(p);
  model.feature_std.resize(p);
  for (std::size_t j = 0; j < p; ++j)
    in >> model.weights[j] >> model.feature_mean[j] >> model.feature_std[j];
  if (!in) throw std::runtime_error(path + ": truncated lasso model");
  return model;
}

}  // namespace pqcxpr
