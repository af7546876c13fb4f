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
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bigspatial/dataset.hpp"
#include "bigspatial/errors.hpp"
#include "bigspatial/gpcore.hpp"
#include "bigspatial/numerics/kdtree.hpp"
#include "bigspatial/numerics/parallel.hpp"

namespace bigspatial::localgp {

enum class SpecMode { global, per_location };

struct LocalGpOptions {
  std::size_t m0 = 6;
  std::size_t m = 50;
  std::size_t pool = 500;
  SpecMode mode = SpecMode::per_location;
  std::optional<CovarianceSpec> spec;  // global spec; moment-based default when unset
  FitOptions local_fit;
};

struct LocalPrediction {
  double mean = 0.0;
  double var = 0.0;
  bool fallback = false;  // local ML failed; global spec used
};

/// Greedy local design around one target.
struct LocalDesign {
  Location target;
  std::vector<std::size_t> design;  // indices into the observations
  std::vector<std::size_t> pool;
  CovarianceSpec spec;
  std::vector<double> variance_path;  // variance at the target after each design size m0..m
};

namespace detail {

inline PredictionResult krige_one(const Observations& obs, const std::vector<std::size_t>& idx, const Location& s,
                                  const CovarianceSpec& spec) {
  return krige(obs.subset(idx), {s}, spec);
}

/// Var(Y(s) | Y(design)) with a known mean.
inline double conditional_variance(const Observations& obs, const std::vector<std::size_t>& design, const Location& s,
                                   const CovarianceSpec& spec) {
  std::vector<Location> pts;
  for (std::size_t i : design) pts.push_back(obs.locations[i]);
  const Mat k = covariance_matrix(pts, spec);
  const Mat c = cross_covariance(pts, {s}, spec);
  const numerics::DenseCholesky f(k);
  return spec.total_variance() - f.half_solve(c).squaredNorm();
}

}  // namespace detail

/// Exact kriging on the m nearest observed sites.
inline LocalPrediction nn_predict(const Observations& obs, const numerics::KdTree& tree, const Location& s,
                                  std::size_t m, const CovarianceSpec& spec) {
  if (m == 0 || m > obs.size()) throw InsufficientPoints("nn_predict: need 1 <= m <= N");
  const auto p = detail::krige_one(obs, tree.knn(s, m), s, spec);
  return {p.mean(0), p.se(0) * p.se(0), false};
}

/// Reduction of the known-mean predictive variance at `s` from adding
/// `candidate` to `design`, computed directly from the small systems.
inline double alc_score(const Observations& obs, const std::vector<std::size_t>& design, std::size_t candidate,
                        const Location& s, const CovarianceSpec& spec) {
  auto extended = design;
  extended.push_back(candidate);
  try {
    const double before = detail::conditional_variance(obs, design, s, spec);
    const double after = detail::conditional_variance(obs, extended, s, spec);
    return std::max(before - after, 0.0);
  } catch (const NotPositiveDefinite&) {
    return 0.0;  // candidate duplicates a noiseless design point
  }
}

/// m0 nearest neighbors, then greedy ALC additions from the `pool` nearest
/// sites until the design has m points. Candidate scores are maintained with
/// rank-one Cholesky extensions; ties go to the nearer pool entry.
inline LocalDesign alc_design(const Observations& obs, const numerics::KdTree& tree, const Location& s,
                              std::size_t m0, std::size_t m, std::size_t pool, const CovarianceSpec& spec) {
  if (m0 == 0 || m0 > m || m > pool || pool > obs.size())
    throw ConfigError("alc: need 1 <= m0 <= m <= pool <= N");
  LocalDesign d;
  d.target = s;
  d.spec = spec;
  d.pool = tree.knn(s, pool);
  const std::size_t np = d.pool.size();
  auto loc = [&](std::size_t p) { return obs.locations[d.pool[p]]; };
  auto cov = [&](std::size_t a, std::size_t b) {
    return a == b ? spec.total_variance() : cov_value(spec, distance(loc(a), loc(b)), false);
  };
  auto cov_s = [&](std::size_t a) {
    const double dd = distance(loc(a), s);
    return cov_value(spec, dd, dd == 0.0);
  };

  // g[p] = L^{-1} k(design, p); q = L^{-1} k(design, s); L = chol K(design).
  std::vector<std::vector<double>> g(np);
  std::vector<double> q;
  std::vector<std::uint8_t> in(np, 0);
  double var = spec.total_variance();
  std::vector<std::size_t> chosen;

  auto add = [&](std::size_t j) {
    double gg = 0.0;
    for (double v : g[j]) gg += v * v;
    const double delta2 = cov(j, j) - gg;
    if (!(delta2 > 1e-14 * spec.total_variance())) throw NotPositiveDefinite("alc: singular design");
    const double delta = std::sqrt(delta2);
    for (std::size_t p = 0; p < np; ++p) {
      if (in[p] || p == j) continue;
      double dot = 0.0;
      for (std::size_t k = 0; k < g[p].size(); ++k) dot += g[p][k] * g[j][k];
      g[p].push_back((cov(p, j) - dot) / delta);
    }
    double dq = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) dq += q[k] * g[j][k];
    const double qn = (cov_s(j) - dq) / delta;
    q.push_back(qn);
    var -= qn * qn;
    in[j] = 1;
    chosen.push_back(j);
  };

  for (std::size_t p = 0; p < m0; ++p) add(p);
  d.variance_path.push_back(var);
  while (chosen.size() < m) {
    std::size_t best = np;
    double best_score = -1.0;
    for (std::size_t p = 0; p < np; ++p) {
      if (in[p]) continue;
      double gg = 0.0, gq = 0.0;
      for (std::size_t k = 0; k < g[p].size(); ++k) gg += g[p][k] * g[p][k], gq += g[p][k] * q[k];
      const double denom = cov(p, p) - gg;
      const double num = cov_s(p) - gq;
      const double score = denom > 1e-14 * spec.total_variance() ? num * num / denom : 0.0;
      if (score > best_score) best_score = score, best = p;
    }
    add(best);
    d.variance_path.push_back(var);
  }
  for (std::size_t p : chosen) d.design.push_back(d.pool[p]);
  return d;
}

/// Greedy design, optional local ML refit, then exact kriging on the design.
inline LocalPrediction alc_predict(const Observations& obs, const numerics::KdTree& tree, const Location& s,
                                   const LocalGpOptions& opt, const CovarianceSpec& global) {
  const std::size_t pool = std::min(opt.pool, obs.size());
  const auto d = alc_design(obs, tree, s, opt.m0, opt.m, pool, global);
  CovarianceSpec spec = global;
  bool fallback = false;
  if (opt.mode == SpecMode::per_location) {
    try {
      const auto fit = fit_ml(obs.subset(d.design), global, opt.local_fit);
      if (fit.converged) spec = fit.spec;
      else fallback = true;
    } catch (const Error&) {
      fallback = true;
    }
  }
  const auto p = detail::krige_one(obs, d.design, s, spec);
  return {p.mean(0), p.se(0) * p.se(0), fallback};
}

inline CovarianceSpec global_spec(const Observations& obs, const LocalGpOptions& opt) {
  return opt.spec.value_or(default_initial_spec(obs));
}

/// Independent ALC predictions for every test site.
inline PredictionResult lagp_batch(const Observations& obs, const std::vector<Location>& tests,
                                   const LocalGpOptions& opt = {}, int workers = 1) {
  if (obs.size() < opt.m) throw InsufficientPoints("lagp: fewer observations than the design size");
  const numerics::KdTree tree(obs.locations);
  const CovarianceSpec global = global_spec(obs, opt);
  PredictionResult out;
  out.method = "lagp";
  out.locations = tests;
  out.resize(tests.size());
  std::vector<std::uint8_t> fell_back(tests.size(), 0);
  std::vector<std::string> failed(tests.size());
  parallel_for(tests.size(), workers, [&](std::size_t t) {
    const auto i = static_cast<Eigen::Index>(t);
    try {
      const auto p = alc_predict(obs, tree, tests[t], opt, global);
      out.mean(i) = p.mean;
      out.se(i) = std::sqrt(std::max(p.var, 0.0));
      fell_back[t] = p.fallback;
    } catch (const Error& e) {
      const auto p = nn_predict(obs, tree, tests[t], opt.m, global);
      out.mean(i) = p.mean;
      out.se(i) = std::sqrt(std::max(p.var, 0.0));
      failed[t] = e.what();
    }
  });
  std::size_t n_fallback = 0;
  for (auto f : fell_back) n_fallback += f;
  if (n_fallback > 0)
    out.warnings.push_back(std::to_string(n_fallback) + " local fits did not converge; global spec used");
  for (std::size_t t = 0; t < tests.size(); ++t)
    if (!failed[t].empty()) out.warnings.push_back("test " + std::to_string(t) + ": " + failed[t] + "; nearest-neighbor prediction used");
  out.set_gaussian_intervals();
  return out;
}

}  // namespace bigspatial::localgp
