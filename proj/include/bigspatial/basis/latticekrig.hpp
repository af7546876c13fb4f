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
#include "bigspatial/numerics/sparse.hpp"

namespace bigspatial::basis {

/// Multiresolution lattice model. Each resolution has Wendland basis
/// functions on a regular lattice, coefficients with SAR precision
/// Q_r = B_r' B_r (B_r: 4 + kappa^2 on the diagonal, -1 for rook neighbors),
/// and rows rescaled so that resolution r contributes marginal variance
/// sigma_w^2 alpha_r everywhere, alpha_r proportional to r^-nu.
struct LatticeKrigOptions {
  std::size_t resolutions = 3;
  double coarsest_spacing = 0.6;
  double margin = 0.6;
  double overlap = 2.5;  // support radius in lattice spacings
  std::optional<BoundingBox> domain;
  std::size_t max_basis = 50000;
  std::size_t dense_factor_limit = 4000;
  FitOptions fit;
};

struct LatticeKrigParams {
  double partial_sill = 1.0;
  double nugget = 0.1;
  double kappa = 0.3;
  double nu = 1.0;
};

struct LatticeKrigFit {
  BasisSystem basis;
  LatticeKrigParams params;
  std::size_t dense_factor_limit = 4000;
  Vec beta;
  Mat beta_cov;
  double loglik = 0.0;
  double initial_loglik = 0.0;
  int evaluations = 0;
  bool converged = false;
  Observations train;
};

inline SparseMatrix lk_precision(const Resolution& l, double kappa) {
  std::vector<Triplet> trip;
  trip.reserve(l.size() * 5);
  for (std::size_t iy = 0; iy < l.ny; ++iy)
    for (std::size_t ix = 0; ix < l.nx; ++ix) {
      const int k = static_cast<int>(iy * l.nx + ix);
      trip.emplace_back(k, k, 4.0 + kappa * kappa);
      if (ix > 0) trip.emplace_back(k, k - 1, -1.0);
      if (ix + 1 < l.nx) trip.emplace_back(k, k + 1, -1.0);
      if (iy > 0) trip.emplace_back(k, k - static_cast<int>(l.nx), -1.0);
      if (iy + 1 < l.ny) trip.emplace_back(k, k + static_cast<int>(l.nx), -1.0);
    }
  SparseMatrix b(static_cast<Eigen::Index>(l.size()), static_cast<Eigen::Index>(l.size()));
  b.setFromTriplets(trip.begin(), trip.end());
  return SparseMatrix(b.transpose() * b);
}

/// alpha_r = r^-nu / sum_j j^-nu, r = 1..R.
inline std::vector<double> lk_weights(std::size_t resolutions, double nu) {
  std::vector<double> a(resolutions);
  double total = 0.0;
  for (std::size_t r = 0; r < resolutions; ++r) total += a[r] = std::pow(static_cast<double>(r + 1), -nu);
  for (auto& v : a) v /= total;
  return a;
}

/// Raw basis rows and their lattice-model variances for a fixed set of sites.
class LatticeKrigModel {
 public:
  LatticeKrigModel(BasisSystem basis, const std::vector<Location>& sites) : basis_(std::move(basis)) {
    for (std::size_t r = 0; r < basis_.resolutions(); ++r) raw_.push_back(basis_.evaluate(sites, r));
  }

  const BasisSystem& basis() const { return basis_; }
  Eigen::Index sites() const { return raw_.empty() ? 0 : raw_.front().rows(); }

  /// Precision factors of every resolution for a given kappa.
  std::vector<numerics::SparseCholesky> factors(double kappa) const {
    std::vector<numerics::SparseCholesky> f;
    for (const auto& l : basis_.levels) f.emplace_back(lk_precision(l, kappa));
    return f;
  }

  /// h_r(s)' Q_r^{-1} h_r(s) for every site.
  static Vec raw_variance(const SparseMatrix& raw, const numerics::SparseCholesky& f) {
    Vec v(raw.rows());
    const Eigen::Index chunk = 512;
    const SparseMatrix rt = raw.transpose();
    for (Eigen::Index lo = 0; lo < raw.rows(); lo += chunk) {
      const Eigen::Index n = std::min(chunk, raw.rows() - lo);
      const Mat z = f.half_solve(Mat(rt.middleCols(lo, n)));
      v.segment(lo, n) = z.colwise().squaredNorm().transpose();
    }
    return v;
  }

  /// Normalized basis matrix, all resolutions side by side.
  SparseMatrix normalized(const LatticeKrigParams& p, const std::vector<numerics::SparseCholesky>& f) const {
    const auto alpha = lk_weights(basis_.resolutions(), p.nu);
    std::vector<Triplet> trip;
    for (std::size_t r = 0; r < raw_.size(); ++r) {
      const Vec v = raw_variance(raw_[r], f[r]);
      const int off = static_cast<int>(basis_.offset(r));
      for (int j = 0; j < raw_[r].outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(raw_[r], j); it; ++it) {
          const double vi = v(it.row());
          if (vi > 0.0) trip.emplace_back(static_cast<int>(it.row()), off + j, it.value() * std::sqrt(p.partial_sill * alpha[r] / vi));
        }
    }
    SparseMatrix h(sites(), static_cast<Eigen::Index>(basis_.size()));
    h.setFromTriplets(trip.begin(), trip.end());
    return h;
  }

  static std::pair<SparseMatrix, double> precision(const BasisSystem& basis, double kappa,
                                                   const std::vector<numerics::SparseCholesky>& f) {
    std::vector<Triplet> trip;
    double log_det = 0.0;
    for (std::size_t r = 0; r < basis.resolutions(); ++r) {
      const SparseMatrix q = lk_precision(basis.levels[r], kappa);
      const int off = static_cast<int>(basis.offset(r));
      for (int j = 0; j < q.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(q, j); it; ++it) trip.emplace_back(off + static_cast<int>(it.row()), off + j, it.value());
      log_det += f[r].log_determinant();
    }
    SparseMatrix p(static_cast<Eigen::Index>(basis.size()), static_cast<Eigen::Index>(basis.size()));
    p.setFromTriplets(trip.begin(), trip.end());
    return {p, log_det};
  }

 private:
  BasisSystem basis_;
  std::vector<SparseMatrix> raw_;
};

/// Calls `f` with the low-rank system of the lattice model at `p`; dense
/// factorization of the K x K matrix up to `dense_limit` coefficients.
template <typename F>
auto with_lk_system(const LatticeKrigModel& model, const LatticeKrigParams& p, std::size_t dense_limit, F&& f) {
  const auto factors = model.factors(p.kappa);
  SparseMatrix h = model.normalized(p, factors);
  auto [prec, log_det] = LatticeKrigModel::precision(model.basis(), p.kappa, factors);
  Vec d = Vec::Constant(h.rows(), p.nugget);
  if (model.basis().size() <= dense_limit) return f(SparseBasisDenseFactor(std::move(h), prec, log_det, std::move(d)));
  return f(SparseLowRank(std::move(h), prec, log_det, std::move(d)));
}

inline double lk_loglik(const Observations& obs, const BasisSystem& basis, const LatticeKrigParams& p,
                        std::size_t dense_limit = 4000) {
  const LatticeKrigModel model(basis, obs.locations);
  return with_lk_system(model, p, dense_limit, [&](const auto& sys) { return sys.profile(obs.y, obs.x).loglik; });
}

inline BasisSystem lk_basis(const Observations& obs, const LatticeKrigOptions& opt) {
  const auto extent = opt.domain.value_or(bounding_box(obs.locations));
  auto b = build_basis(extent, opt.resolutions, Family::wendland, opt.coarsest_spacing, opt.margin, opt.overlap);
  if (b.size() > opt.max_basis) throw TooLarge("latticekrig: basis count exceeds the configured ceiling");
  return b;
}

inline LatticeKrigFit lk_fit(const Observations& obs, const LatticeKrigOptions& opt = {}) {
  if (obs.size() < 10) throw InsufficientPoints("latticekrig: need at least 10 observations");
  LatticeKrigFit fit;
  fit.basis = lk_basis(obs, opt);
  fit.dense_factor_limit = opt.dense_factor_limit;
  const LatticeKrigModel model(fit.basis, obs.locations);
  const CovarianceSpec base = default_initial_spec(obs);

  Vec x0(4);
  x0 << std::log(base.partial_sill), std::log(base.nugget), std::log(0.3), 1.0;
  auto unpack = [](const Vec& x) { return LatticeKrigParams{std::exp(x(0)), std::exp(x(1)), std::exp(x(2)), x(3)}; };
  auto objective = [&](const Vec& x) {
    if ((x.head(3).array() < opt.fit.min_log_param).any() || (x.head(3).array() > 50.0).any() || std::abs(x(3)) > 20.0)
      return std::numeric_limits<double>::infinity();
    try {
      return -with_lk_system(model, unpack(x), opt.dense_factor_limit,
                             [&](const auto& sys) { return sys.profile(obs.y, obs.x).loglik; });
    } catch (const NotPositiveDefinite&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const auto res = numerics::nelder_mead(objective, x0, opt.fit.simplex);
  fit.params = unpack(res.x);
  const auto prof = with_lk_system(model, fit.params, opt.dense_factor_limit,
                                   [&](const auto& sys) { return sys.profile(obs.y, obs.x); });
  fit.beta = prof.beta;
  fit.beta_cov = prof.beta_cov;
  fit.loglik = prof.loglik;
  fit.initial_loglik = -objective(x0);
  fit.evaluations = res.evaluations;
  fit.converged = res.converged;
  fit.train = obs;
  return fit;
}

inline PredictionResult lk_predict(const BasisSystem& basis, const LatticeKrigParams& p, const Observations& train,
                                   const Vec& beta, const Mat& beta_cov, const std::vector<Location>& tests,
                                   std::size_t dense_limit = 4000, int workers = 1) {
  const LatticeKrigModel model(basis, train.locations);
  const LatticeKrigModel test_model(basis, tests);
  const auto factors = test_model.factors(p.kappa);
  const SparseMatrix h0 = test_model.normalized(p, factors);
  TrendSpec trend;
  trend.kind = train.trend;
  PredictionResult out;
  out.method = "latticekrig";
  out.locations = tests;
  const Vec d0 = Vec::Constant(static_cast<Eigen::Index>(tests.size()), p.nugget);
  const SparseMatrix h0t = h0.transpose();
  auto rows = [&](std::size_t lo, std::size_t hi) {
    return Mat(Mat(h0t.middleCols(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(hi - lo))).transpose());
  };
  with_lk_system(model, p, dense_limit, [&](const auto& sys) {
    sys.predict(rows, d0, trend.design(tests), beta, beta_cov, train.y, train.x, out, workers);
    return 0;
  });
  return out;
}

/// Generalized least squares trend with the lattice model's covariance.
inline GaussianProfile lk_profile(const Observations& obs, const BasisSystem& basis, const LatticeKrigParams& p,
                                  std::size_t dense_limit = 4000) {
  const LatticeKrigModel model(basis, obs.locations);
  return with_lk_system(model, p, dense_limit, [&](const auto& sys) { return sys.profile(obs.y, obs.x); });
}

inline PredictionResult lk_predict(const LatticeKrigFit& fit, const std::vector<Location>& tests, int workers = 1) {
  return lk_predict(fit.basis, fit.params, fit.train, fit.beta, fit.beta_cov, tests, fit.dense_factor_limit, workers);
}

}  // namespace bigspatial::basis
