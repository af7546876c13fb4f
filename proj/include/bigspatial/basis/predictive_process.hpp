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
#include <vector>

#include "bigspatial/basis/woodbury.hpp"
#include "bigspatial/gpcore.hpp"
#include "bigspatial/numerics/optimize.hpp"
#include "bigspatial/numerics/random.hpp"

namespace bigspatial::basis {

enum class KnotPlacement { grid, kmeans };

struct PredictiveProcessOptions {
  std::size_t knots_per_side = 5;
  KnotPlacement placement = KnotPlacement::grid;
  std::size_t kmeans_knots = 25;
  std::uint64_t seed = 1;
  bool modified = true;  // add the variance deficit back as independent noise
  double jitter = 1e-14;  // relative floor on the diagonal when it vanishes
  FitOptions fit;
};

/// g x g regular grid spanning the bounding box of `locs`, endpoints included.
inline std::vector<Location> grid_knots(const std::vector<Location>& locs, std::size_t g) {
  if (g == 0) throw ConfigError("grid_knots: need at least one knot per side");
  const auto b = bounding_box(locs);
  std::vector<Location> k;
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = 0; j < g; ++j) {
      const double fx = g == 1 ? 0.5 : static_cast<double>(j) / static_cast<double>(g - 1);
      const double fy = g == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(g - 1);
      k.push_back({b.lon_min + fx * b.width(), b.lat_min + fy * b.height()});
    }
  return k;
}

/// Lloyd's k-means started from a seeded sample of distinct sites.
inline std::vector<Location> kmeans_knots(const std::vector<Location>& locs, std::size_t k, std::uint64_t seed,
                                          int iterations = 50) {
  if (k == 0 || k > locs.size()) throw InsufficientPoints("kmeans_knots: need 1 <= k <= N");
  Rng rng(seed);
  std::vector<std::size_t> idx(locs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
  std::vector<Location> c;
  for (std::size_t i = 0; i < k; ++i) c.push_back(locs[idx[i]]);
  std::vector<std::size_t> assign(locs.size(), 0);
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < locs.size(); ++i) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        const double d = squared_distance(locs[i], c[j]);
        if (d < bd) bd = d, best = j;
      }
      changed |= assign[i] != best;
      assign[i] = best;
    }
    std::vector<double> sx(k, 0.0), sy(k, 0.0), n(k, 0.0);
    for (std::size_t i = 0; i < locs.size(); ++i) {
      sx[assign[i]] += locs[i].lon;
      sy[assign[i]] += locs[i].lat;
      n[assign[i]] += 1.0;
    }
    for (std::size_t j = 0; j < k; ++j)
      if (n[j] > 0) c[j] = {sx[j] / n[j], sy[j] / n[j]};
    if (!changed && it > 0) break;
  }
  return c;
}

/// Induced basis C(s, s*) Sigma*^{-1}, one row per location.
inline Mat pp_build(const std::vector<Location>& knots, const CovarianceSpec& spec, const std::vector<Location>& locs) {
  const CovarianceSpec latent{spec.partial_sill, spec.range, 0.0};
  const numerics::DenseCholesky f(covariance_matrix(knots, latent));
  const Mat c = distance_matrix(locs, knots);
  const Mat cross = latent.partial_sill * (-c.array() / latent.range).exp().matrix();
  return f.solve(Mat(cross.transpose())).transpose();
}

/// Low-rank pieces of the predictive process at given sites.
struct PredictiveProcessTerms {
  Mat cross;      // C(s, s*)
  Vec deficit;    // sigma_w^2 - c' Sigma*^{-1} c
};

inline PredictiveProcessTerms pp_terms(const std::vector<Location>& knots, const CovarianceSpec& spec,
                                       const numerics::DenseCholesky& knot_factor, const std::vector<Location>& locs) {
  PredictiveProcessTerms t;
  t.cross = spec.partial_sill * (-distance_matrix(locs, knots).array() / spec.range).exp().matrix();
  const Mat z = knot_factor.half_solve(Mat(t.cross.transpose()));
  t.deficit = (spec.partial_sill - z.colwise().squaredNorm().array()).matrix().transpose();
  return t;
}

inline Vec pp_diagonal(const PredictiveProcessTerms& t, const CovarianceSpec& spec, bool modified, double jitter) {
  Vec d(t.deficit.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double v = (modified ? std::max(t.deficit(i), 0.0) : 0.0) + spec.nugget;
    d(i) = v > 0.0 ? v : jitter * spec.partial_sill;
  }
  return d;
}

struct PredictiveProcessModel {
  std::vector<Location> knots;
  CovarianceSpec spec;
  numerics::DenseCholesky knot_factor;
  PredictiveProcessTerms terms;
  DenseLowRank system;
};

inline PredictiveProcessModel pp_model(const Observations& obs, const std::vector<Location>& knots,
                                       const CovarianceSpec& spec, bool modified, double jitter = 1e-14) {
  const CovarianceSpec latent{spec.partial_sill, spec.range, 0.0};
  numerics::DenseCholesky kf(covariance_matrix(knots, latent));
  auto terms = pp_terms(knots, spec, kf, obs.locations);
  const Mat sigma_star = covariance_matrix(knots, latent);
  DenseLowRank sys(terms.cross, sigma_star, kf.log_determinant(), pp_diagonal(terms, spec, modified, jitter));
  return {knots, spec, std::move(kf), std::move(terms), std::move(sys)};
}

inline double pp_loglik(const Observations& obs, const std::vector<Location>& knots, const CovarianceSpec& spec,
                        bool modified = true) {
  return pp_model(obs, knots, spec, modified).system.profile(obs.y, obs.x).loglik;
}

struct PredictiveProcessFit {
  std::vector<Location> knots;
  CovarianceSpec spec;
  bool modified = true;
  double jitter = 1e-14;
  Vec beta;
  Mat beta_cov;
  double loglik = 0.0;
  double initial_loglik = 0.0;
  int evaluations = 0;
  bool converged = false;
  Observations train;
};

inline std::vector<Location> pp_knots(const Observations& obs, const PredictiveProcessOptions& opt) {
  if (opt.placement == KnotPlacement::kmeans) return kmeans_knots(obs.locations, opt.kmeans_knots, opt.seed);
  return grid_knots(obs.locations, opt.knots_per_side);
}

inline PredictiveProcessFit pp_fit(const Observations& obs, const std::vector<Location>& knots,
                                   const CovarianceSpec& init, const PredictiveProcessOptions& opt = {}) {
  if (knots.empty()) throw InsufficientPoints("pred-proc: need at least one knot");
  if (obs.size() < 10) throw InsufficientPoints("pred-proc: need at least 10 observations");
  auto profile = [&](const CovarianceSpec& s) {
    return pp_model(obs, knots, s, opt.modified, opt.jitter).system.profile(obs.y, obs.x);
  };
  const GpFit g = maximize_profile(profile, init, opt.fit);
  PredictiveProcessFit fit;
  fit.knots = knots;
  fit.spec = g.spec;
  fit.modified = opt.modified;
  fit.jitter = opt.jitter;
  fit.beta = g.beta;
  fit.beta_cov = g.beta_cov;
  fit.loglik = g.loglik;
  fit.initial_loglik = g.initial_loglik;
  fit.evaluations = g.evaluations;
  fit.converged = g.converged;
  fit.train = obs;
  return fit;
}

inline PredictionResult pp_predict(const PredictiveProcessFit& fit, const std::vector<Location>& tests,
                                   int workers = 1) {
  const auto model = pp_model(fit.train, fit.knots, fit.spec, fit.modified, fit.jitter);
  const auto t0 = pp_terms(fit.knots, fit.spec, model.knot_factor, tests);
  const Vec d0 = pp_diagonal(t0, fit.spec, fit.modified, 0.0);
  TrendSpec trend;
  trend.kind = fit.train.trend;
  PredictionResult out;
  out.method = "pred-proc";
  out.locations = tests;
  auto rows = [&](std::size_t lo, std::size_t hi) {
    return Mat(t0.cross.middleRows(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(hi - lo)));
  };
  model.system.predict(rows, d0, trend.design(tests), fit.beta, fit.beta_cov, fit.train.y, fit.train.x, out, workers);
  return out;
}

/// Knot placement, ML fit and prediction in one call.
inline std::pair<PredictiveProcessFit, PredictionResult> pp_fit_predict(const Observations& obs,
                                                                         const std::vector<Location>& tests,
                                                                         const CovarianceSpec& init,
                                                                         const PredictiveProcessOptions& opt = {},
                                                                         int workers = 1) {
  auto fit = pp_fit(obs, pp_knots(obs, opt), init, opt);
  auto pred = pp_predict(fit, tests, workers);
  return {std::move(fit), std::move(pred)};
}

}  // namespace bigspatial::basis
