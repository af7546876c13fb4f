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
#include <limits>
#include <tuple>
#include <numbers>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "bigspatial/basis/functions.hpp"
#include "bigspatial/dataset.hpp"
#include "bigspatial/errors.hpp"
#include "bigspatial/gpcore.hpp"
#include "bigspatial/numerics/kdtree.hpp"
#include "bigspatial/numerics/parallel.hpp"
#include "bigspatial/numerics/sparse.hpp"

namespace bigspatial::taper {

/// Wendland correlation taper with support radius `range` (degrees).
struct TaperSpec {
  double range = 1.0;

  double operator()(double d) const { return basis::eval_wendland(d / range); }
};

/// Taper range giving about `neighbors` sites inside the support at the
/// average density of `locs`.
inline TaperSpec taper_for_neighbors(const std::vector<Location>& locs, double neighbors) {
  const auto b = bounding_box(locs);
  const double density = static_cast<double>(locs.size()) / std::max(b.width() * b.height(), 1e-12);
  return {std::sqrt(neighbors / (std::numbers::pi * density))};
}

/// Sigma o T, both triangles stored.
inline SparseMatrix build_tapered_cov(const std::vector<Location>& locs, const CovarianceSpec& spec,
                                      const TaperSpec& taper) {
  if (!(taper.range > 0.0)) throw ConfigError("taper range must be positive");
  const numerics::KdTree tree(locs);
  std::vector<Triplet> trip;
  for (std::size_t i = 0; i < locs.size(); ++i) {
    for (std::size_t j : tree.within(locs[i], taper.range)) {
      const double d = distance(locs[i], locs[j]);
      const double v = i == j ? spec.total_variance() : cov_value(spec, d, d == 0.0) * taper(d);
      if (v != 0.0) trip.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    }
  }
  SparseMatrix s(static_cast<Eigen::Index>(locs.size()), static_cast<Eigen::Index>(locs.size()));
  s.setFromTriplets(trip.begin(), trip.end());
  return s;
}

/// One-taper Gaussian profile log-likelihood.
inline GaussianProfile taper_profile(const Observations& obs, const CovarianceSpec& spec, const TaperSpec& taper) {
  const numerics::SparseCholesky f(build_tapered_cov(obs.locations, spec, taper));
  return profile_gaussian(f, obs.y, obs.x);
}

inline double taper_loglik(const Observations& obs, const CovarianceSpec& spec, const TaperSpec& taper) {
  return taper_profile(obs, spec, taper).loglik;
}

struct Lag {
  int drow = 0, dcol = 0;
  double distance = 0.0;
  double value = 0.0;
  std::size_t pairs = 0;
};

struct EmpiricalCovariance {
  std::vector<Lag> lags;
};

/// Half-plane grid offsets within `max_lag` cells, sorted by length. The
/// shortest quarter of the target is kept whole and the rest thinned with a
/// fixed stride so that about `target` offsets remain; target 0 keeps all.
inline std::vector<std::pair<int, int>> select_offsets(const GridGeometry& g, int max_lag, std::size_t target) {
  std::vector<std::pair<int, int>> all;
  for (int dr = 0; dr <= max_lag; ++dr)
    for (int dc = -max_lag; dc <= max_lag; ++dc) {
      if (dr == 0 && dc < 0) continue;
      if (dr * dr + dc * dc > max_lag * max_lag) continue;
      all.emplace_back(dr, dc);
    }
  auto len = [&](const std::pair<int, int>& o) {
    return std::hypot(o.second * g.lon_step(), o.first * g.lat_step());
  };
  std::stable_sort(all.begin(), all.end(), [&](const auto& a, const auto& b) { return len(a) < len(b); });
  if (target == 0 || all.size() <= target) return all;
  const std::size_t head = target / 4;
  const std::size_t stride = (all.size() - head + (target - head) - 1) / (target - head);
  std::vector<std::pair<int, int>> kept(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(head));
  for (std::size_t i = head; i < all.size(); i += stride) kept.push_back(all[i]);
  return kept;
}

/// Method-of-moments covariance of OLS residuals at selected grid offsets:
/// the average of r(s) r(s + h) over complete pairs. Offsets without pairs
/// are dropped.
inline EmpiricalCovariance empirical_cov_gridded(const SpatialDataset& d, int max_lag = 10, std::size_t target = 60,
                                                 int workers = 1) {
  const auto& g = d.geometry;
  const auto obs = observations(d);
  if (obs.size() == 0) throw InsufficientPoints("empirical covariance: no observations");
  const Vec beta = obs.x.colPivHouseholderQr().solve(obs.y);
  std::vector<double> resid(g.cell_count(), 0.0);
  {
    std::size_t k = 0;
    for (std::size_t c = 0; c < g.cell_count(); ++c)
      if (d.observed[c]) {
        resid[c] = obs.y(static_cast<Eigen::Index>(k)) - obs.x.row(static_cast<Eigen::Index>(k)).dot(beta);
        ++k;
      }
  }
  const auto offsets = select_offsets(g, max_lag, target);
  std::vector<Lag> lags(offsets.size());
  parallel_for(offsets.size(), workers, [&](std::size_t k) {
    const auto [dr, dc] = offsets[k];
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r + static_cast<std::size_t>(dr) < g.n_rows; ++r)
      for (std::size_t c = 0; c < g.n_cols; ++c) {
        const long c2 = static_cast<long>(c) + dc;
        if (c2 < 0 || c2 >= static_cast<long>(g.n_cols)) continue;
        const std::size_t a = g.cell(r, c), b = g.cell(r + static_cast<std::size_t>(dr), static_cast<std::size_t>(c2));
        if (!d.observed[a] || !d.observed[b]) continue;
        sum += resid[a] * resid[b];
        ++n;
      }
    lags[k] = {dr, dc, std::hypot(dc * g.lon_step(), dr * g.lat_step()), n ? sum / static_cast<double>(n) : 0.0, n};
  });
  EmpiricalCovariance out;
  for (const auto& l : lags)
    if (l.pairs > 0) out.lags.push_back(l);
  return out;
}

struct TaperFitOptions {
  double min_range_factor = 0.05;  // search bounds for phi, relative to the largest lag
  double max_range_factor = 50.0;
};

/// Weighted least squares fit of sigma_w^2 exp(-h / phi) + sigma_eps^2 1{h = 0}
/// to empirical covariances, weights = pair counts. For fixed phi the two
/// variances solve a linear problem; phi is found by Brent's method on log phi.
inline CovarianceSpec taper_fit(const EmpiricalCovariance& emp, const TaperFitOptions& opt = {}) {
  std::vector<double> distinct;
  for (const auto& l : emp.lags) distinct.push_back(l.distance);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) throw InsufficientPoints("taper_fit: need at least three distinct lags");
  const double hmax = distinct.back();
  const double hmin = distinct[1];

  // Returns (objective, sill, nugget) at a given range.
  auto solve = [&](double phi) {
    double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
    for (const auto& l : emp.lags) {
      const double w = static_cast<double>(l.pairs);
      const double e = std::exp(-l.distance / phi);
      const double z = l.distance == 0.0 ? 1.0 : 0.0;
      a11 += w * e * e;
      a12 += w * e * z;
      a22 += w * z * z;
      b1 += w * e * l.value;
      b2 += w * z * l.value;
    }
    double sill = 0.0, nugget = 0.0;
    const double det = a11 * a22 - a12 * a12;
    if (det > 1e-14 * a11 * a22) {
      sill = (a22 * b1 - a12 * b2) / det;
      nugget = (a11 * b2 - a12 * b1) / det;
    }
    if (!(nugget >= 0.0)) {
      nugget = 0.0;
      sill = b1 / a11;
    }
    double obj = 0.0;
    for (const auto& l : emp.lags) {
      const double fit = sill * std::exp(-l.distance / phi) + (l.distance == 0.0 ? nugget : 0.0);
      obj += static_cast<double>(l.pairs) * (l.value - fit) * (l.value - fit);
    }
    return std::tuple{obj, sill, nugget};
  };

  const double lo = std::log(opt.min_range_factor * hmin), hi = std::log(opt.max_range_factor * hmax);
  const auto [log_phi, obj] = boost::math::tools::brent_find_minima(
      [&](double t) { return std::get<0>(solve(std::exp(t))); }, lo, hi, std::numeric_limits<double>::digits);
  const double phi = std::exp(log_phi);
  const auto [o, sill, nugget] = solve(phi);
  (void)obj;
  (void)o;
  const double span = hi - lo;
  if (!(sill > 0.0) || log_phi - lo < 1e-6 * span || hi - log_phi < 1e-6 * span)
    throw NonConvergence("taper_fit: least squares optimum on the boundary; covariance not identifiable");
  return {sill, phi, nugget};
}

inline CovarianceSpec taper_fit(const SpatialDataset& d, int max_lag = 10, std::size_t target = 60,
                                const TaperFitOptions& opt = {}) {
  return taper_fit(empirical_cov_gridded(d, max_lag, target), opt);
}

/// Kriging with Sigma o T and tapered cross-covariances; GLS trend under the
/// tapered model.
inline PredictionResult taper_predict(const Observations& obs, const std::vector<Location>& tests,
                                      const CovarianceSpec& spec, const TaperSpec& taper, int workers = 1) {
  if (obs.size() == 0) throw InsufficientPoints("taper_predict: no observations");
  const numerics::SparseCholesky f(build_tapered_cov(obs.locations, spec, taper));
  const auto prof = profile_gaussian(f, obs.y, obs.x);
  const Mat xt = f.half_solve(obs.x);
  const Vec rt = f.half_solve(Vec(obs.y - obs.x * prof.beta));
  const numerics::KdTree tree(obs.locations);
  TrendSpec trend;
  trend.kind = obs.trend;
  PredictionResult out;
  out.method = "taper";
  out.locations = tests;
  out.resize(tests.size());
  const auto n = static_cast<Eigen::Index>(obs.size());
  const std::size_t chunk = 64;
  parallel_for((tests.size() + chunk - 1) / chunk, workers, [&](std::size_t c) {
    const std::size_t lo = c * chunk, hi = std::min(tests.size(), lo + chunk);
    Mat cross = Mat::Zero(n, static_cast<Eigen::Index>(hi - lo));
    for (std::size_t t = lo; t < hi; ++t)
      for (std::size_t j : tree.within(tests[t], taper.range)) {
        const double d = distance(tests[t], obs.locations[j]);
        cross(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(t - lo)) = cov_value(spec, d, d == 0.0) * taper(d);
      }
    const Mat w = f.half_solve(cross);
    for (std::size_t t = lo; t < hi; ++t) {
      const auto k = static_cast<Eigen::Index>(t - lo);
      const auto i = static_cast<Eigen::Index>(t);
      const Eigen::RowVectorXd x0 = trend.design_row(tests[t]);
      const Vec u = x0.transpose() - xt.transpose() * w.col(k);
      out.mean(i) = x0.dot(prof.beta) + w.col(k).dot(rt);
      const double var = spec.total_variance() - w.col(k).squaredNorm() + u.dot(prof.beta_cov * u);
      out.se(i) = std::sqrt(std::max(var, 0.0));
    }
  });
  out.set_gaussian_intervals();
  return out;
}

}  // namespace bigspatial::taper
