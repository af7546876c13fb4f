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
#include <cstdint>
#include <numbers>
#include <vector>

#include "bigspatial/dataset.hpp"
#include "bigspatial/errors.hpp"
#include "bigspatial/numerics/dense.hpp"
#include "bigspatial/numerics/optimize.hpp"
#include "bigspatial/numerics/parallel.hpp"
#include "bigspatial/numerics/random.hpp"

namespace bigspatial {

inline constexpr double kLog2Pi = 1.8378770664093454836;

inline double cov_value(const CovarianceSpec& spec, double d, bool same_point) {
  return spec.partial_sill * std::exp(-d / spec.range) + (same_point ? spec.nugget : 0.0);
}

inline Mat distance_matrix(const std::vector<Location>& a, const std::vector<Location>& b) {
  Mat d(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t j = 0; j < b.size(); ++j)
    for (std::size_t i = 0; i < a.size(); ++i)
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = distance(a[i], b[j]);
  return d;
}

/// Covariance of Y at `locs`: the nugget sits on the diagonal only.
inline Mat covariance_from_distances(const Mat& dist, const CovarianceSpec& spec) {
  Mat c = spec.partial_sill * (-dist.array() / spec.range).exp().matrix();
  c.diagonal().array() += spec.nugget;
  return c;
}

inline Mat covariance_matrix(const std::vector<Location>& locs, const CovarianceSpec& spec) {
  return covariance_from_distances(distance_matrix(locs, locs), spec);
}

/// Cov(Y(a_i), Y(b_j)); the nugget enters only where the two sites coincide.
inline Mat cross_covariance(const std::vector<Location>& a, const std::vector<Location>& b,
                            const CovarianceSpec& spec) {
  Mat c(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t j = 0; j < b.size(); ++j)
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = distance(a[i], b[j]);
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cov_value(spec, d, d == 0.0);
    }
  return c;
}

/// Gaussian log-likelihood with beta replaced by its GLS estimate.
struct GaussianProfile {
  double loglik = 0.0;
  Vec beta;
  Mat beta_cov;  // (X' S^{-1} X)^{-1}
};

/// `Factor` exposes half_solve (L^{-1} P b) and log_determinant.
template <typename Factor>
GaussianProfile profile_gaussian(const Factor& factor, const Vec& y, const Mat& x) {
  const Mat xt = factor.half_solve(x);
  const Vec yt = factor.half_solve(y);
  const Mat xtx = xt.transpose() * xt;
  Eigen::LLT<Mat> gram(xtx);
  if (gram.info() != Eigen::Success) throw Error("trend design is rank deficient");
  GaussianProfile p;
  p.beta = gram.solve(xt.transpose() * yt);
  p.beta_cov = gram.solve(Mat::Identity(xtx.rows(), xtx.cols()));
  const double quad = (yt - xt * p.beta).squaredNorm();
  p.loglik = -0.5 * (static_cast<double>(y.size()) * kLog2Pi + factor.log_determinant() + quad);
  return p;
}

/// Same profile from log|S| and the solves S^{-1}y, S^{-1}X.
inline GaussianProfile profile_from_solves(double log_det, const Vec& y, const Mat& x, const Vec& sy, const Mat& sx) {
  const Mat xsx = x.transpose() * sx;
  Eigen::LLT<Mat> gram(0.5 * (xsx + xsx.transpose()));
  if (gram.info() != Eigen::Success) throw Error("trend design is rank deficient");
  GaussianProfile p;
  p.beta = gram.solve(x.transpose() * sy);
  p.beta_cov = gram.solve(Mat::Identity(xsx.rows(), xsx.cols()));
  const Vec r = y - x * p.beta;
  const double quad = r.dot(sy - sx * p.beta);
  p.loglik = -0.5 * (static_cast<double>(y.size()) * kLog2Pi + log_det + quad);
  return p;
}

inline GaussianProfile exact_profile(const Observations& obs, const CovarianceSpec& spec) {
  if (obs.size() == 0) throw InsufficientPoints("loglik: no observations");
  const numerics::DenseCholesky f(covariance_matrix(obs.locations, spec));
  return profile_gaussian(f, obs.y, obs.x);
}

inline double loglik(const Observations& obs, const CovarianceSpec& spec) { return exact_profile(obs, spec).loglik; }
inline double loglik(const SpatialDataset& d, const CovarianceSpec& spec) { return loglik(observations(d), spec); }

/// Log-parameterization shared by the likelihood-based fitters.
inline Vec to_log_params(const CovarianceSpec& s) {
  Vec v(3);
  v << std::log(s.partial_sill), std::log(s.range), std::log(s.nugget);
  return v;
}

inline CovarianceSpec from_log_params(const Vec& v) { return {std::exp(v(0)), std::exp(v(1)), std::exp(v(2))}; }

/// Moment-based starting values: OLS residual variance split 80/20 between
/// sill and nugget, range a tenth of the domain diameter.
inline CovarianceSpec default_initial_spec(const Observations& obs) {
  const Vec beta = obs.x.colPivHouseholderQr().solve(obs.y);
  const Vec r = obs.y - obs.x * beta;
  const double v = std::max(r.squaredNorm() / std::max<double>(1.0, static_cast<double>(r.size())), 1e-8);
  return {0.8 * v, std::max(0.1 * bounding_box(obs.locations).diameter(), 1e-6), 0.2 * v};
}

struct GpFit {
  CovarianceSpec spec;
  Vec beta;
  Mat beta_cov;
  double loglik = 0.0;
  double initial_loglik = 0.0;
  int evaluations = 0;
  bool converged = false;
};

struct FitOptions {
  numerics::SimplexOptions simplex{};
  double min_log_param = -25.0;  // floor on log-parameters (keeps factorizations finite)
};

/// Maximizes a profile log-likelihood over log (partial sill, range, nugget).
/// `profile(spec)` returns a GaussianProfile and may throw NotPositiveDefinite.
template <typename Profile>
GpFit maximize_profile(Profile&& profile, const CovarianceSpec& init, const FitOptions& opt = {}) {
  Vec x0 = to_log_params(init).cwiseMax(opt.min_log_param);
  auto objective = [&](const Vec& v) {
    if ((v.array() < opt.min_log_param).any() || (v.array() > 50.0).any()) return std::numeric_limits<double>::infinity();
    try {
      return -profile(from_log_params(v)).loglik;
    } catch (const NotPositiveDefinite&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const auto res = numerics::nelder_mead(objective, x0, opt.simplex);
  GpFit fit;
  fit.spec = from_log_params(res.x);
  const auto p = profile(fit.spec);
  fit.beta = p.beta;
  fit.beta_cov = p.beta_cov;
  fit.loglik = p.loglik;
  fit.initial_loglik = -objective(x0);
  fit.evaluations = res.evaluations;
  fit.converged = res.converged;
  return fit;
}

/// Maximum-likelihood fit of the exact model. Returns the best point found
/// with `converged == false` when the evaluation budget runs out.
inline GpFit fit_ml(const Observations& obs, const CovarianceSpec& init, const FitOptions& opt = {}) {
  if (obs.size() < 10) throw InsufficientPoints("fit_ml: need at least 10 observations");
  const Mat dist = distance_matrix(obs.locations, obs.locations);
  auto profile = [&](const CovarianceSpec& s) {
    const numerics::DenseCholesky f(covariance_from_distances(dist, s));
    return profile_gaussian(f, obs.y, obs.x);
  };
  return maximize_profile(profile, init, opt);
}

inline GpFit fit_ml(const SpatialDataset& d, const CovarianceSpec& init, const FitOptions& opt = {}) {
  return fit_ml(observations(d), init, opt);
}

/// Factorized covariance of the observed sites, shared by kriging workers.
class KrigingSystem {
 public:
  KrigingSystem(const Observations& obs, const CovarianceSpec& spec)
      : obs_(&obs), spec_(spec), factor_(covariance_matrix(obs.locations, spec)),
        xt_(factor_.half_solve(obs.x)) {
    profile_ = profile_gaussian(factor_, obs.y, obs.x);
  }

  const GaussianProfile& profile() const { return profile_; }
  const CovarianceSpec& spec() const { return spec_; }

  /// Kriging predictor with trend coefficients `beta` whose estimation
  /// covariance is `beta_cov` (zero for a known mean). With the GLS values
  /// this is universal kriging:
  ///   mean = x0'b + c'S^{-1}(y - Xb)
  ///   var  = C(0) - c'S^{-1}c + (x0 - X'S^{-1}c)' beta_cov (x0 - X'S^{-1}c)
  void predict(const std::vector<Location>& tests, const Vec& beta, const Mat& beta_cov,
               PredictionResult& out, int workers = 1) const {
    out.locations = tests;
    out.resize(tests.size());
    const Vec rt = factor_.half_solve(Vec(obs_->y - obs_->x * beta));
    TrendSpec trend;
    trend.kind = obs_->trend;
    const std::size_t chunk = 256;
    const std::size_t n_chunks = (tests.size() + chunk - 1) / chunk;
    parallel_for(n_chunks, workers, [&](std::size_t c) {
      const std::size_t lo = c * chunk;
      const std::size_t hi = std::min(tests.size(), lo + chunk);
      std::vector<Location> block(tests.begin() + static_cast<std::ptrdiff_t>(lo),
                                  tests.begin() + static_cast<std::ptrdiff_t>(hi));
      const Mat w = factor_.half_solve(cross_covariance(obs_->locations, block, spec_));
      const Mat x0 = trend.design(block);
      const Mat u = x0.transpose() - xt_.transpose() * w;
      for (std::size_t k = 0; k < block.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        const auto i = static_cast<Eigen::Index>(lo + k);
        out.mean(i) = x0.row(kk).dot(beta) + w.col(kk).dot(rt);
        double var = spec_.total_variance() - w.col(kk).squaredNorm() +
                     u.col(kk).dot(beta_cov * u.col(kk));
        out.se(i) = std::sqrt(std::max(var, 0.0));
      }
    });
    out.set_gaussian_intervals();
  }

 private:
  const Observations* obs_;
  CovarianceSpec spec_;
  numerics::DenseCholesky factor_;
  Mat xt_;
  GaussianProfile profile_;
};

struct KrigeOptions {
  std::size_t max_exact_n = 20000;
  int workers = 1;
};

/// Exact universal kriging with GLS trend coefficients.
inline PredictionResult krige(const Observations& train, const std::vector<Location>& tests,
                              const CovarianceSpec& spec, const KrigeOptions& opt = {}) {
  if (train.size() > opt.max_exact_n) throw TooLarge("krige: observed count exceeds the exact-method ceiling");
  if (train.size() == 0) throw InsufficientPoints("krige: no observations");
  const KrigingSystem sys(train, spec);
  PredictionResult out;
  out.method = "exact-gp";
  sys.predict(tests, sys.profile().beta, sys.profile().beta_cov, out, opt.workers);
  return out;
}

inline PredictionResult krige(const SpatialDataset& train, const std::vector<Location>& tests,
                              const CovarianceSpec& spec, const KrigeOptions& opt = {}) {
  return krige(observations(train), tests, spec, opt);
}

/// Exact draw mu + L z + nugget noise on every cell of `geometry`, with L
/// the dense Cholesky factor of the partial-sill covariance.
inline SpatialDataset simulate_gp(const GridGeometry& geometry, const CovarianceSpec& spec, const TrendSpec& trend,
                                  std::uint64_t seed, std::size_t max_cells = 20000) {
  const std::size_t n = geometry.cell_count();
  if (n > max_cells) throw TooLarge("simulate_gp: grid exceeds the dense simulation ceiling");
  if (trend.coefficients.size() != trend.rank()) throw ConfigError("simulate_gp: trend coefficients missing");
  std::vector<Location> locs(n);
  for (std::size_t i = 0; i < n; ++i) locs[i] = geometry.center(i);

  Rng rng(seed);
  Vec z(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  Vec field = Vec::Zero(static_cast<Eigen::Index>(n));
  if (spec.partial_sill > 0.0) {
    const CovarianceSpec latent{spec.partial_sill, spec.range, 0.0};
    const numerics::DenseCholesky f(covariance_matrix(locs, latent));
    field = f.matrix_l().triangularView<Eigen::Lower>() * z;
  }
  SpatialDataset d = SpatialDataset::empty(geometry, trend.kind);
  d.trend = trend;
  const double nugget_sd = std::sqrt(spec.nugget);
  for (std::size_t i = 0; i < n; ++i) {
    const double noise = nugget_sd > 0.0 ? nugget_sd * rng.normal() : 0.0;
    d.set(i, trend.mean(locs[i]) + field(static_cast<Eigen::Index>(i)) + noise);
  }
  return d;
}

}  // namespace bigspatial
