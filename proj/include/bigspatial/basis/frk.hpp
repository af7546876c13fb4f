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

#include <cmath>
#include <optional>
#include <vector>

#include "bigspatial/basis/functions.hpp"
#include "bigspatial/basis/woodbury.hpp"
#include "bigspatial/gpcore.hpp"
#include "bigspatial/numerics/optimize.hpp"

namespace bigspatial::basis {

/// Fixed rank kriging: multiresolution bisquare basis with block-diagonal
/// coefficient covariance, block r = variance_r * exp(-d / range_r), plus a
/// diagonal fine-scale and measurement variance.
struct FrkOptions {
  std::size_t resolutions = 3;
  double coarsest_spacing = 2.4;  // 2 x 2 coarse centers on the case-study extent, K = 84
  double margin = 0.0;
  double aperture_factor = 1.5;
  std::optional<BoundingBox> domain;  // defaults to the bounding box of the data
  std::optional<double> measurement_variance;  // estimated jointly with the fine scale when unset
  std::size_t max_basis = 2000;
  FitOptions fit;
};

struct FrkParams {
  std::vector<double> variance;  // per resolution
  std::vector<double> range;     // per resolution
  double fine_scale = 0.0;       // sigma_xi^2; holds the whole diagonal when measurement is not supplied
  double measurement = 0.0;      // sigma_eps^2

  double diagonal() const { return fine_scale + measurement; }
};

struct FrkFit {
  BasisSystem basis;
  FrkParams params;
  Vec beta;
  Mat beta_cov;
  double loglik = 0.0;
  double initial_loglik = 0.0;
  int evaluations = 0;
  bool converged = false;
  Observations train;
};

/// Prior precision of the coefficients and its log-determinant.
inline std::pair<Mat, double> frk_precision(const BasisSystem& basis, const FrkParams& p) {
  const auto k = static_cast<Eigen::Index>(basis.size());
  Mat prec = Mat::Zero(k, k);
  double log_det = 0.0;
  for (std::size_t r = 0; r < basis.resolutions(); ++r) {
    const auto centers = basis.levels[r].centers();
    const Mat s = covariance_matrix(centers, {p.variance[r], p.range[r], 0.0});
    const numerics::DenseCholesky f(s);
    const auto off = static_cast<Eigen::Index>(basis.offset(r));
    const auto n = static_cast<Eigen::Index>(centers.size());
    prec.block(off, off, n, n) = f.solve(Mat::Identity(n, n));
    log_det -= f.log_determinant();
  }
  return {prec, log_det};
}

inline DenseLowRank frk_system(const Mat& h, const BasisSystem& basis, const FrkParams& p) {
  auto [prec, log_det] = frk_precision(basis, p);
  return DenseLowRank(h, prec, log_det, Vec::Constant(h.rows(), p.diagonal()));
}

inline double frk_loglik(const Observations& obs, const BasisSystem& basis, const FrkParams& p) {
  const Mat h(basis.evaluate(obs.locations));
  return frk_system(h, basis, p).profile(obs.y, obs.x).loglik;
}

inline FrkFit frk_fit(const Observations& obs, const FrkOptions& opt = {}) {
  const auto extent = opt.domain.value_or(bounding_box(obs.locations));
  FrkFit fit;
  fit.basis = build_basis(extent, opt.resolutions, Family::bisquare, opt.coarsest_spacing, opt.margin, opt.aperture_factor);
  const std::size_t k = fit.basis.size();
  if (k > opt.max_basis) throw TooLarge("frk: basis count exceeds the configured ceiling");
  if (obs.size() < 10) throw InsufficientPoints("frk: need at least 10 observations");
  const std::size_t nr = fit.basis.resolutions();
  const Mat h(fit.basis.evaluate(obs.locations));

  // starting values from the OLS residual variance
  const CovarianceSpec base = default_initial_spec(obs);
  const double v = base.total_variance();
  Vec x0(static_cast<Eigen::Index>(2 * nr + 1));
  for (std::size_t r = 0; r < nr; ++r) {
    const auto off = static_cast<Eigen::Index>(fit.basis.offset(r));
    const auto kr = static_cast<Eigen::Index>(fit.basis.levels[r].size());
    const double q = std::max(h.middleCols(off, kr).rowwise().squaredNorm().mean(), 1e-8);
    x0(static_cast<Eigen::Index>(r)) = std::log(0.8 * v / (static_cast<double>(nr) * q));
    x0(static_cast<Eigen::Index>(nr + r)) = std::log(2.0 * fit.basis.levels[r].spacing);
  }
  const double meas = opt.measurement_variance.value_or(0.0);
  x0(static_cast<Eigen::Index>(2 * nr)) = std::log(std::max(0.2 * v - meas, 0.02 * v));

  auto unpack = [&](const Vec& x) {
    FrkParams p;
    for (std::size_t r = 0; r < nr; ++r) {
      p.variance.push_back(std::exp(x(static_cast<Eigen::Index>(r))));
      p.range.push_back(std::exp(x(static_cast<Eigen::Index>(nr + r))));
    }
    p.fine_scale = std::exp(x(static_cast<Eigen::Index>(2 * nr)));
    p.measurement = meas;
    return p;
  };
  auto objective = [&](const Vec& x) {
    if ((x.array() < opt.fit.min_log_param).any() || (x.array() > 50.0).any())
      return std::numeric_limits<double>::infinity();
    try {
      return -frk_system(h, fit.basis, unpack(x)).profile(obs.y, obs.x).loglik;
    } catch (const NotPositiveDefinite&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const auto res = numerics::nelder_mead(objective, x0, opt.fit.simplex);
  fit.params = unpack(res.x);
  const auto prof = frk_system(h, fit.basis, fit.params).profile(obs.y, obs.x);
  fit.beta = prof.beta;
  fit.beta_cov = prof.beta_cov;
  fit.loglik = prof.loglik;
  fit.initial_loglik = -objective(x0);
  fit.evaluations = res.evaluations;
  fit.converged = res.converged;
  fit.train = obs;
  return fit;
}

/// Predicts Y(s0) = mu + w + xi + eps at each test site.
inline PredictionResult frk_predict(const BasisSystem& basis, const FrkParams& p, const Observations& train,
                                    const Vec& beta, const Mat& beta_cov, const std::vector<Location>& tests,
                                    int workers = 1) {
  const Mat h(basis.evaluate(train.locations));
  const auto sys = frk_system(h, basis, p);
  TrendSpec trend;
  trend.kind = train.trend;
  PredictionResult out;
  out.method = "frk";
  out.locations = tests;
  const Vec d0 = Vec::Constant(static_cast<Eigen::Index>(tests.size()), p.diagonal());
  auto rows = [&](std::size_t lo, std::size_t hi) {
    const std::vector<Location> block(tests.begin() + static_cast<std::ptrdiff_t>(lo),
                                      tests.begin() + static_cast<std::ptrdiff_t>(hi));
    return Mat(basis.evaluate(block));
  };
  sys.predict(rows, d0, trend.design(tests), beta, beta_cov, train.y, train.x, out, workers);
  return out;
}

inline PredictionResult frk_predict(const FrkFit& fit, const std::vector<Location>& tests, int workers = 1) {
  return frk_predict(fit.basis, fit.params, fit.train, fit.beta, fit.beta_cov, tests, workers);
}

}  // namespace bigspatial::basis
