/*
 * Copyright 2026 The bigspatial Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "bigspatial/numerics/dense.hpp"

namespace bigspatial::numerics {

struct SimplexOptions {
  double f_tolerance = 1e-6;  // spread of objective values across the simplex
  double x_tolerance = 1e-4;  // max vertex distance from the best vertex
  int max_evaluations = 2000;
  double initial_step = 0.5;
};

struct SimplexResult {
  Vec x;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
};

/// Nelder-Mead minimization. Non-finite objective values are treated as +inf,
/// so the starting point is always a candidate and the result is never worse.
template <typename Objective>
SimplexResult nelder_mead(Objective&& f, const Vec& x0, const SimplexOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  SimplexResult res;
  auto eval = [&](const Vec& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Vec> pts(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> vals(static_cast<std::size_t>(n + 1));
  vals[0] = eval(x0);
  for (Eigen::Index i = 0; i < n; ++i) {
    pts[static_cast<std::size_t>(i + 1)](i) += opt.initial_step;
    vals[static_cast<std::size_t>(i + 1)] = eval(pts[static_cast<std::size_t>(i + 1)]);
  }

  std::vector<std::size_t> order(pts.size());
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    std::vector<Vec> p2;
    std::vector<double> v2;
    for (auto i : order) {
      p2.push_back(pts[i]);
      v2.push_back(vals[i]);
    }
    pts.swap(p2);
    vals.swap(v2);
  };

  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
  while (true) {
    sort_simplex();
    double size = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) size = std::max(size, (pts[i] - pts[0]).cwiseAbs().maxCoeff());
    const double spread = vals.back() - vals.front();
    if (std::isfinite(spread) && spread <= opt.f_tolerance && size <= opt.x_tolerance) {
      res.converged = true;
      break;
    }
    if (res.evaluations >= opt.max_evaluations) break;

    Vec centroid = Vec::Zero(n);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) centroid += pts[i];
    centroid /= static_cast<double>(n);

    const Vec& worst = pts.back();
    Vec xr = centroid + alpha * (centroid - worst);
    double fr = eval(xr);
    if (fr < vals.front()) {
      Vec xe = centroid + gamma * (xr - centroid);
      double fe = eval(xe);
      if (fe < fr) {
        pts.back() = xe;
        vals.back() = fe;
      } else {
        pts.back() = xr;
        vals.back() = fr;
      }
      continue;
    }
    if (fr < vals[vals.size() - 2]) {
      pts.back() = xr;
      vals.back() = fr;
      continue;
    }
    const bool outside = fr < vals.back();
    Vec xc = outside ? Vec(centroid + rho * (xr - centroid)) : Vec(centroid + rho * (worst - centroid));
    double fc = eval(xc);
    if (fc < (outside ? fr : vals.back())) {
      pts.back() = xc;
      vals.back() = fc;
      continue;
    }
    for (std::size_t i = 1; i < pts.size(); ++i) {
      pts[i] = pts[0] + sigma * (pts[i] - pts[0]);
      vals[i] = eval(pts[i]);
    }
  }
  res.x = pts.front();
  res.value = vals.front();
  return res;
}

}  // namespace bigspatial::numerics
