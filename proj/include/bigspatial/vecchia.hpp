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
#include <limits>
#include <numeric>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "bigspatial/dataset.hpp"
#include "bigspatial/errors.hpp"
#include "bigspatial/gpcore.hpp"
#include "bigspatial/numerics/kdtree.hpp"
#include "bigspatial/numerics/parallel.hpp"
#include "bigspatial/numerics/random.hpp"
#include "bigspatial/numerics/sparse.hpp"

namespace bigspatial::vecchia {

enum class Ordering { lexicographic, maxmin };

/// Ordered sites and their conditioning sets. Neighbor entries are positions
/// in the ordering, all strictly earlier than the site they belong to.
struct NeighborGraph {
  std::vector<std::size_t> order;  // position -> original index
  std::vector<std::vector<std::size_t>> neighbors;
  std::size_t m = 0;

  std::size_t size() const { return order.size(); }
};

/// Lexicographic by (lon, lat), or max-min distance starting from the site
/// nearest the centroid. Ties go to the lower index. Max-min is O(N^2).
inline std::vector<std::size_t> site_order(const std::vector<Location>& locs, Ordering rule) {
  std::vector<std::size_t> order(locs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (rule == Ordering::lexicographic) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (locs[a].lon != locs[b].lon) return locs[a].lon < locs[b].lon;
      return locs[a].lat < locs[b].lat;
    });
    return order;
  }
  const std::size_t n = locs.size();
  if (n == 0) return order;
  double cx = 0.0, cy = 0.0;
  for (const auto& s : locs) cx += s.lon, cy += s.lat;
  const Location c{cx / static_cast<double>(n), cy / static_cast<double>(n)};
  std::size_t first = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (squared_distance(locs[i], c) < squared_distance(locs[first], c)) first = i;
  std::vector<double> gap(n, std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> taken(n, 0);
  order.clear();
  std::size_t next = first;
  for (std::size_t k = 0; k < n; ++k) {
    order.push_back(next);
    taken[next] = 1;
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      gap[i] = std::min(gap[i], squared_distance(locs[i], locs[next]));
      if (best == n || gap[i] > gap[best]) best = i;
    }
    next = best;
  }
  return order;
}

/// m nearest earlier sites (by distance, then position) for every position.
inline NeighborGraph build_graph(const std::vector<Location>& locs, std::size_t m,
                                 Ordering rule = Ordering::lexicographic, int workers = 1) {
  if (m == 0) throw ConfigError("build_graph: m must be at least 1");
  NeighborGraph g;
  g.m = m;
  g.order = site_order(locs, rule);
  const std::size_t n = locs.size();
  std::vector<Location> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = locs[g.order[i]];
  const numerics::KdTree tree(pts);
  g.neighbors.resize(n);

  auto brute = [&](std::size_t i, std::size_t want) {
    std::vector<std::pair<double, std::size_t>> d(i);
    for (std::size_t j = 0; j < i; ++j) d[j] = {squared_distance(pts[i], pts[j]), j};
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(want), d.end());
    std::vector<std::size_t> out(want);
    for (std::size_t k = 0; k < want; ++k) out[k] = d[k].second;
    return out;
  };

  parallel_for(n, workers, [&](std::size_t i) {
    const std::size_t want = std::min(m, i);
    if (want == 0) return;
    std::size_t k = std::min(n - 1, 2 * m + 2);
    while (true) {
      if (k > 4 * i || k >= n - 1) {
        g.neighbors[i] = brute(i, want);
        return;
      }
      std::vector<std::size_t> out;
      for (std::size_t j : tree.knn(pts[i], k, i))
        if (j < i) {
          out.push_back(j);
          if (out.size() == want) break;
        }
      if (out.size() == want) {
        g.neighbors[i] = std::move(out);
        return;
      }
      k = std::min(n - 1, 2 * k);
    }
  });
  return g;
}

/// Sparse Cholesky-type factors of the Vecchia precision, in ordered
/// positions: row i of A holds the kriging weights of site i on its
/// neighbors, D_i the conditional variance.
struct VecchiaFactors {
  std::vector<Vec> weights;  // aligned with graph.neighbors
  Vec d;

  /// Strictly lower-triangular A.
  SparseMatrix a_matrix(const NeighborGraph& g) const {
    std::vector<Triplet> trip;
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t k = 0; k < g.neighbors[i].size(); ++k)
        trip.emplace_back(static_cast<int>(i), static_cast<int>(g.neighbors[i][k]),
                          weights[i](static_cast<Eigen::Index>(k)));
    SparseMatrix a(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size()));
    a.setFromTriplets(trip.begin(), trip.end());
    return a;
  }

  /// (I - A)' D^{-1} (I - A).
  SparseMatrix precision(const NeighborGraph& g) const {
    SparseMatrix ia = -a_matrix(g);
    for (Eigen::Index i = 0; i < ia.rows(); ++i) ia.coeffRef(i, i) += 1.0;
    const SparseMatrix dinv_ia = d.cwiseInverse().asDiagonal() * ia;
    return SparseMatrix(ia.transpose() * dinv_ia);
  }

  /// D^{-1/2} (I - A) b for b given in ordered positions.
  Mat whiten(const NeighborGraph& g, const Mat& b) const {
    Mat out(b.rows(), b.cols());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      Eigen::RowVectorXd row = b.row(ii);
      for (std::size_t k = 0; k < g.neighbors[i].size(); ++k)
        row -= weights[i](static_cast<Eigen::Index>(k)) * b.row(static_cast<Eigen::Index>(g.neighbors[i][k]));
      out.row(ii) = row / std::sqrt(d(ii));
    }
    return out;
  }
};

/// Response covariance (nugget on the diagonal) conditioned on each
/// neighbor set through m x m Cholesky solves.
inline VecchiaFactors vecchia_factors(const NeighborGraph& g, const CovarianceSpec& spec,
                                      const std::vector<Location>& locs, int workers = 1) {
  VecchiaFactors f;
  const std::size_t n = g.size();
  f.weights.resize(n);
  f.d.resize(static_cast<Eigen::Index>(n));
  parallel_for(n, workers, [&](std::size_t i) {
    const Location& s = locs[g.order[i]];
    const auto& nb = g.neighbors[i];
    const auto k = static_cast<Eigen::Index>(nb.size());
    double var = spec.total_variance();
    if (k > 0) {
      Mat c(k, k);
      Vec c0(k);
      for (Eigen::Index a = 0; a < k; ++a) {
        const Location& sa = locs[g.order[nb[static_cast<std::size_t>(a)]]];
        c0(a) = cov_value(spec, distance(s, sa), false);
        c(a, a) = spec.total_variance();
        for (Eigen::Index b = 0; b < a; ++b)
          c(a, b) = c(b, a) = cov_value(spec, distance(sa, locs[g.order[nb[static_cast<std::size_t>(b)]]]), false);
      }
      const numerics::DenseCholesky ch(c);
      f.weights[i] = ch.solve(c0);
      var -= c0.dot(f.weights[i]);
    } else {
      f.weights[i] = Vec();
    }
    if (!(var > 0.0)) throw NotPositiveDefinite("vecchia: non-positive conditional variance");
    f.d(static_cast<Eigen::Index>(i)) = var;
  });
  return f;
}

namespace detail {

inline Mat permute_rows(const Mat& b, const std::vector<std::size_t>& order) {
  Mat out(b.rows(), b.cols());
  for (std::size_t i = 0; i < order.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = b.row(static_cast<Eigen::Index>(order[i]));
  return out;
}

}  // namespace detail

/// Gaussian profile log-likelihood under the Vecchia covariance, GLS trend.
inline GaussianProfile vecchia_profile(const Observations& obs, const NeighborGraph& g, const VecchiaFactors& f) {
  if (g.size() != obs.size()) throw LengthMismatch("vecchia: graph and observations differ in size");
  const Mat yt = f.whiten(g, detail::permute_rows(obs.y, g.order));
  const Mat xt = f.whiten(g, detail::permute_rows(obs.x, g.order));
  const Mat xtx = xt.transpose() * xt;
  Eigen::LLT<Mat> gram(xtx);
  if (gram.info() != Eigen::Success) throw Error("trend design is rank deficient");
  GaussianProfile p;
  p.beta = gram.solve(xt.transpose() * yt.col(0));
  p.beta_cov = gram.solve(Mat::Identity(xtx.rows(), xtx.cols()));
  const double quad = (yt.col(0) - xt * p.beta).squaredNorm();
  p.loglik = -0.5 * (static_cast<double>(obs.size()) * kLog2Pi + f.d.array().log().sum() + quad);
  return p;
}

inline double vecchia_loglik(const Observations& obs, const NeighborGraph& g, const VecchiaFactors& f) {
  return vecchia_profile(obs, g, f).loglik;
}

inline double vecchia_loglik(const Observations& obs, const CovarianceSpec& spec, std::size_t m,
                             Ordering rule = Ordering::lexicographic) {
  const auto g = build_graph(obs.locations, m, rule);
  return vecchia_loglik(obs, g, vecchia_factors(g, spec, obs.locations));
}

struct NngpOptions {
  std::size_t m = 20;
  Ordering ordering = Ordering::lexicographic;
  FitOptions fit;
  int workers = 1;
};

struct NngpFit {
  CovarianceSpec spec;
  std::size_t m = 20;
  Vec beta;
  Mat beta_cov;
  double loglik = 0.0;
  double initial_loglik = 0.0;
  int evaluations = 0;
  bool converged = false;
  Observations train;
};

/// Maximum-likelihood fit of the response model under the Vecchia likelihood.
inline NngpFit nngp_response_fit(const Observations& obs, const CovarianceSpec& init, const NngpOptions& opt = {}) {
  if (obs.size() < 10) throw InsufficientPoints("nngp: need at least 10 observations");
  const auto g = build_graph(obs.locations, opt.m, opt.ordering, opt.workers);
  auto profile = [&](const CovarianceSpec& s) {
    return vecchia_profile(obs, g, vecchia_factors(g, s, obs.locations, opt.workers));
  };
  const GpFit r = maximize_profile(profile, init, opt.fit);
  NngpFit fit;
  fit.spec = r.spec;
  fit.m = opt.m;
  fit.beta = r.beta;
  fit.beta_cov = r.beta_cov;
  fit.loglik = r.loglik;
  fit.initial_loglik = r.initial_loglik;
  fit.evaluations = r.evaluations;
  fit.converged = r.converged;
  fit.train = obs;
  return fit;
}

/// Conditional moments of Y(s0) given its nearest observed sites.
struct LocalKrige {
  double mean = 0.0;
  double var = 0.0;
};

namespace detail {

/// Kriging of one site from neighbor set `nb` with trend `beta`; `u` receives
/// x0 - X_N' C_N^{-1} c.
inline LocalKrige local_krige(const Observations& train, const std::vector<std::size_t>& nb, const Location& s0,
                              const Eigen::RowVectorXd& x0, const CovarianceSpec& spec, const Vec& beta, Vec& u) {
  const auto k = static_cast<Eigen::Index>(nb.size());
  Mat c(k, k);
  Vec c0(k), r(k);
  Mat xn(k, train.x.cols());
  for (Eigen::Index a = 0; a < k; ++a) {
    const std::size_t ia = nb[static_cast<std::size_t>(a)];
    const double d0 = distance(s0, train.locations[ia]);
    c0(a) = cov_value(spec, d0, d0 == 0.0);
    c(a, a) = spec.total_variance();
    for (Eigen::Index b = 0; b < a; ++b)
      c(a, b) = c(b, a) = cov_value(spec, distance(train.locations[ia], train.locations[nb[static_cast<std::size_t>(b)]]), false);
    xn.row(a) = train.x.row(static_cast<Eigen::Index>(ia));
    r(a) = train.y(static_cast<Eigen::Index>(ia)) - xn.row(a).dot(beta);
  }
  const numerics::DenseCholesky ch(c);
  const Vec w = ch.solve(c0);
  u = x0.transpose() - xn.transpose() * w;
  return {x0.dot(beta) + w.dot(r), spec.total_variance() - c0.dot(w)};
}

}  // namespace detail

/// Per test site, Gaussian conditional on its m nearest observed sites, with
/// the trend uncertainty `beta_cov` propagated.
inline PredictionResult nngp_predict(const Observations& train, const CovarianceSpec& spec, const Vec& beta,
                                     const Mat& beta_cov, const std::vector<Location>& tests, std::size_t m,
                                     int workers = 1) {
  if (train.size() == 0) throw InsufficientPoints("nngp_predict: no observations");
  const std::size_t k = std::min(m, train.size());
  const numerics::KdTree tree(train.locations);
  TrendSpec trend;
  trend.kind = train.trend;
  PredictionResult out;
  out.method = "nngp-response";
  out.locations = tests;
  out.resize(tests.size());
  parallel_for(tests.size(), workers, [&](std::size_t t) {
    const auto i = static_cast<Eigen::Index>(t);
    Vec u;
    const auto lk = detail::local_krige(train, tree.knn(tests[t], k), tests[t], trend.design_row(tests[t]), spec, beta, u);
    out.mean(i) = lk.mean;
    out.se(i) = std::sqrt(std::max(lk.var + u.dot(beta_cov * u), 0.0));
  });
  out.set_gaussian_intervals();
  return out;
}

inline PredictionResult nngp_predict(const NngpFit& fit, const std::vector<Location>& tests, int workers = 1) {
  return nngp_predict(fit.train, fit.spec, fit.beta, fit.beta_cov, tests, fit.m, workers);
}

/// Grid-search settings of the conjugate model. Y = X beta + e with
/// Cov(e) = sigma^2 R, R the Vecchia approximation of exp(-d / phi) + alpha I.
/// Prior: flat on beta, sigma^2 ~ IG(prior_shape, prior_rate).
struct ConjugateConfig {
  std::vector<double> alphas;
  std::vector<double> ranges;
  std::size_t folds = 5;
  std::uint64_t seed = 1;
  double prior_shape = 2.0;
  double prior_rate = 1.0;
  std::size_t m = 20;
  Ordering ordering = Ordering::lexicographic;
};

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = n == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) / static_cast<double>(n - 1));
  return g;
}

/// alpha: 10 log-spaced values in [0.01, 2]; phi: 10 log-spaced values in
/// [0.05, 2] x (diameter / 10) of the observed sites.
inline ConjugateConfig default_conjugate_config(const Observations& obs) {
  ConjugateConfig c;
  const double scale = 0.1 * bounding_box(obs.locations).diameter();
  c.alphas = log_grid(0.01, 2.0, 10);
  c.ranges = log_grid(0.05 * scale, 2.0 * scale, 10);
  return c;
}

/// Normal-inverse-gamma posterior at fixed (alpha, phi).
struct ConjugatePosterior {
  double alpha = 0.0, range = 1.0;
  Vec beta;       // posterior mean of beta
  Mat beta_corr;  // (X' R^{-1} X)^{-1}; Cov(beta | sigma^2) = sigma^2 beta_corr
  double shape = 0.0, rate = 0.0;
  Observations train;

  double degrees_of_freedom() const { return 2.0 * shape; }
  double sigma2_mean() const { return rate / (shape - 1.0); }
};

inline ConjugatePosterior conjugate_posterior(const Observations& obs, const NeighborGraph& g, double alpha,
                                              double range, const ConjugateConfig& cfg, int workers = 1) {
  const CovarianceSpec corr{1.0, range, alpha};
  const auto f = vecchia_factors(g, corr, obs.locations, workers);
  const auto prof = vecchia_profile(obs, g, f);
  const double quad = -2.0 * prof.loglik - static_cast<double>(obs.size()) * kLog2Pi - f.d.array().log().sum();
  ConjugatePosterior p;
  p.alpha = alpha;
  p.range = range;
  p.beta = prof.beta;
  p.beta_corr = prof.beta_cov;
  p.shape = cfg.prior_shape + 0.5 * static_cast<double>(obs.size() - static_cast<std::size_t>(obs.x.cols()));
  p.rate = cfg.prior_rate + 0.5 * quad;
  p.train = obs;
  return p;
}

/// Student-t predictive: `se` holds the t scale, intervals use the t quantile
/// with 2 a* degrees of freedom.
inline PredictionResult conjugate_predict(const ConjugatePosterior& post, const std::vector<Location>& tests,
                                          std::size_t m, int workers = 1, double level = 0.95) {
  const CovarianceSpec corr{1.0, post.range, post.alpha};
  const numerics::KdTree tree(post.train.locations);
  const std::size_t k = std::min(m, post.train.size());
  TrendSpec trend;
  trend.kind = post.train.trend;
  PredictionResult out;
  out.method = "nngp-conjugate";
  out.locations = tests;
  out.resize(tests.size());
  const double s2 = post.rate / post.shape;
  parallel_for(tests.size(), workers, [&](std::size_t t) {
    const auto i = static_cast<Eigen::Index>(t);
    Vec u;
    const auto lk =
        detail::local_krige(post.train, tree.knn(tests[t], k), tests[t], trend.design_row(tests[t]), corr, post.beta, u);
    out.mean(i) = lk.mean;
    out.se(i) = std::sqrt(std::max(s2 * (lk.var + u.dot(post.beta_corr * u)), 0.0));
  });
  const boost::math::students_t dist(post.degrees_of_freedom());
  out.set_gaussian_intervals(boost::math::quantile(dist, 0.5 + 0.5 * level));
  return out;
}

struct ConjugateResult {
  PredictionResult prediction;
  ConjugatePosterior posterior;
  double alpha = 0.0, range = 0.0;
  Mat cv_rmse;  // alphas x ranges
};

/// K-fold cross-validated RMSE over the (alpha, phi) grid, refit of the
/// winner on all data and t predictions at `tests`.
inline ConjugateResult conjugate_nngp(const Observations& obs, const std::vector<Location>& tests,
                                      const ConjugateConfig& cfg, int workers = 1) {
  if (cfg.alphas.empty() || cfg.ranges.empty()) throw ConfigError("conjugate nngp: empty grid");
  if (cfg.folds < 2) throw ConfigError("conjugate nngp: need at least two folds");
  if (obs.size() < 2 * cfg.folds) throw InsufficientPoints("conjugate nngp: too few observations for the folds");
  for (double a : cfg.alphas)
    if (!(a >= 0.0)) throw ConfigError("conjugate nngp: alpha must be nonnegative");
  for (double r : cfg.ranges)
    if (!(r > 0.0)) throw ConfigError("conjugate nngp: range must be positive");

  const std::size_t na = cfg.alphas.size(), nr = cfg.ranges.size();
  ConjugateResult res;
  res.cv_rmse = Mat::Zero(static_cast<Eigen::Index>(na), static_cast<Eigen::Index>(nr));

  if (na * nr > 1) {
    std::vector<std::size_t> perm(obs.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(cfg.seed);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    std::vector<std::size_t> fold(obs.size());
    for (std::size_t i = 0; i < perm.size(); ++i) fold[perm[i]] = i % cfg.folds;

    struct Fold {
      Observations train;
      std::vector<Location> held;
      Vec truth;
      NeighborGraph graph;
      std::vector<std::vector<std::size_t>> held_nb;
    };
    std::vector<Fold> folds(cfg.folds);
    for (std::size_t f = 0; f < cfg.folds; ++f) {
      std::vector<std::size_t> tr, te;
      for (std::size_t i = 0; i < obs.size(); ++i) (fold[i] == f ? te : tr).push_back(i);
      auto& fd = folds[f];
      fd.train = obs.subset(tr);
      fd.truth.resize(static_cast<Eigen::Index>(te.size()));
      for (std::size_t k = 0; k < te.size(); ++k) {
        fd.held.push_back(obs.locations[te[k]]);
        fd.truth(static_cast<Eigen::Index>(k)) = obs.y(static_cast<Eigen::Index>(te[k]));
      }
      fd.graph = build_graph(fd.train.locations, cfg.m, cfg.ordering, workers);
      const numerics::KdTree tree(fd.train.locations);
      const std::size_t k = std::min(cfg.m, fd.train.size());
      for (const auto& s : fd.held) fd.held_nb.push_back(tree.knn(s, k));
    }

    TrendSpec trend;
    trend.kind = obs.trend;
    parallel_for(na * nr, workers, [&](std::size_t cell) {
      const std::size_t ia = cell / nr, ir = cell % nr;
      const CovarianceSpec corr{1.0, cfg.ranges[ir], cfg.alphas[ia]};
      double sse = 0.0;
      std::size_t count = 0;
      for (const auto& fd : folds) {
        const auto prof = vecchia_profile(fd.train, fd.graph, vecchia_factors(fd.graph, corr, fd.train.locations));
        Vec u;
        for (std::size_t t = 0; t < fd.held.size(); ++t) {
          const auto lk = detail::local_krige(fd.train, fd.held_nb[t], fd.held[t], trend.design_row(fd.held[t]), corr,
                                              prof.beta, u);
          const double e = lk.mean - fd.truth(static_cast<Eigen::Index>(t));
          sse += e * e;
          ++count;
        }
      }
      res.cv_rmse(static_cast<Eigen::Index>(ia), static_cast<Eigen::Index>(ir)) = std::sqrt(sse / static_cast<double>(count));
    });
  }

  Eigen::Index ba = 0, br = 0;
  res.cv_rmse.minCoeff(&ba, &br);
  res.alpha = cfg.alphas[static_cast<std::size_t>(ba)];
  res.range = cfg.ranges[static_cast<std::size_t>(br)];
  const auto g = build_graph(obs.locations, cfg.m, cfg.ordering, workers);
  res.posterior = conjugate_posterior(obs, g, res.alpha, res.range, cfg, workers);
  res.prediction = conjugate_predict(res.posterior, tests, cfg.m, workers);
  return res;
}

}  // namespace bigspatial::vecchia
