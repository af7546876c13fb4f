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
#include <numeric>
#include <string>
#include <vector>

#include "bigspatial/dataset.hpp"
#include "bigspatial/errors.hpp"
#include "bigspatial/gpcore.hpp"
#include "bigspatial/numerics/parallel.hpp"
#include "bigspatial/numerics/random.hpp"
#include "bigspatial/scoring.hpp"

namespace bigspatial::ensemble {

// ---------------------------------------------------------------------------
// Spatial partitioning with a shared trend.

/// Axis-aligned tiling: longitude strips, each cut into latitude tiles.
/// Block id = strip * tiles_per_strip + tile.
struct Partition {
  std::vector<double> lon_cuts;               // strip boundaries, ascending
  std::vector<std::vector<double>> lat_cuts;  // per strip
  std::vector<std::size_t> block;             // block id per site
  std::size_t count = 0;

  std::size_t locate(const Location& s) const {
    const auto strip = static_cast<std::size_t>(std::upper_bound(lon_cuts.begin(), lon_cuts.end(), s.lon) - lon_cuts.begin());
    const auto& cuts = lat_cuts[strip];
    const auto tile = static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), s.lat) - cuts.begin());
    std::size_t id = 0;
    for (std::size_t k = 0; k < strip; ++k) id += lat_cuts[k].size() + 1;
    return id + tile;
  }

  std::vector<std::vector<std::size_t>> members() const {
    std::vector<std::vector<std::size_t>> m(count);
    for (std::size_t i = 0; i < block.size(); ++i) m[block[i]].push_back(i);
    return m;
  }
};

namespace detail {

/// Cuts splitting `values` into `parts` groups of near-equal count, placed
/// midway between distinct neighboring values. Duplicate cuts are dropped.
inline std::vector<double> quantile_cuts(std::vector<double> values, std::size_t parts) {
  std::sort(values.begin(), values.end());
  std::vector<double> cuts;
  const std::size_t n = values.size();
  for (std::size_t k = 1; k < parts; ++k) {
    std::size_t pos = (k * n + parts / 2) / parts;
    if (pos == 0 || pos >= n) continue;
    // move to the nearest boundary between distinct values
    std::size_t up = pos, down = pos;
    while (up < n && values[up] == values[up - 1]) ++up;
    while (down > 0 && values[down] == values[down - 1]) --down;
    std::size_t at = (up < n && (down == 0 || up - pos <= pos - down)) ? up : down;
    if (at == 0 || at >= n) continue;
    const double c = 0.5 * (values[at - 1] + values[at]);
    if (cuts.empty() || c > cuts.back()) cuts.push_back(c);
  }
  return cuts;
}

}  // namespace detail

/// Tiling with about `target` sites per tile. The strip/tile counts are the
/// most square-shaped choice whose mean tile count is within 25% of target.
inline Partition make_partition(const std::vector<Location>& locs, std::size_t target) {
  if (target < 50) throw ConfigError("make_partition: target must be at least 50");
  if (locs.empty()) throw EmptyTrain("make_partition: no sites");
  const double n = static_cast<double>(locs.size());
  const auto box = bounding_box(locs);
  const double w = std::max(box.width(), 1e-12), h = std::max(box.height(), 1e-12);
  std::size_t strips = 1, tiles = 1;
  if (locs.size() > target) {
    const auto d0 = static_cast<std::size_t>(std::max(1.0, std::round(n / static_cast<double>(target))));
    double best = std::numeric_limits<double>::infinity();
    const auto lo = static_cast<std::size_t>(std::ceil(n / (1.25 * static_cast<double>(target))));
    const auto hi = static_cast<std::size_t>(std::floor(n / (0.75 * static_cast<double>(target))));
    for (std::size_t d = std::max<std::size_t>(1, std::min(lo, d0)); d <= std::max(hi, d0); ++d)
      for (std::size_t a = 1; a <= d; ++a) {
        if (d % a) continue;
        const std::size_t b = d / a;  // a strips of b tiles
        const double shape = std::abs(std::log((w / static_cast<double>(a)) / (h / static_cast<double>(b))));
        const double fill = std::abs(std::log(n / static_cast<double>(d) / static_cast<double>(target)));
        const double score = shape + 4.0 * fill;
        if (score < best) best = score, strips = a, tiles = b;
      }
  }
  Partition p;
  std::vector<double> lons(locs.size());
  for (std::size_t i = 0; i < locs.size(); ++i) lons[i] = locs[i].lon;
  p.lon_cuts = detail::quantile_cuts(lons, strips);
  std::vector<std::vector<double>> strip_lats(p.lon_cuts.size() + 1);
  auto strip_of = [&](const Location& s) {
    return static_cast<std::size_t>(std::upper_bound(p.lon_cuts.begin(), p.lon_cuts.end(), s.lon) - p.lon_cuts.begin());
  };
  for (const auto& s : locs) strip_lats[strip_of(s)].push_back(s.lat);
  for (auto& lats : strip_lats) p.lat_cuts.push_back(detail::quantile_cuts(lats, tiles));
  for (const auto& c : p.lat_cuts) p.count += c.size() + 1;
  p.block.resize(locs.size());
  for (std::size_t i = 0; i < locs.size(); ++i) p.block[i] = p.locate(locs[i]);
  return p;
}

struct PartitionFitOptions {
  std::size_t target = 500;
  int max_sweeps = 20;
  double tolerance = 1e-6;  // relative objective change between sweeps
  std::size_t min_block = 30;
  FitOptions fit;
};

struct PartitionFit {
  Partition partition;
  std::vector<Observations> blocks;
  std::vector<CovarianceSpec> specs;
  Vec beta;
  Mat beta_cov;
  double loglik = 0.0;
  std::vector<double> history;  // objective after each sweep, starting with the initial value
  int sweeps = 0;
  bool converged = false;
};

/// Block log-likelihood with the trend coefficients held fixed.
inline double block_loglik(const Observations& obs, const CovarianceSpec& spec, const Vec& beta) {
  const numerics::DenseCholesky f(covariance_matrix(obs.locations, spec));
  const double quad = f.half_solve(Vec(obs.y - obs.x * beta)).squaredNorm();
  return -0.5 * (static_cast<double>(obs.size()) * kLog2Pi + f.log_determinant() + quad);
}

/// GLS coefficients pooled across independent blocks.
inline GaussianProfile shared_gls(const std::vector<Observations>& blocks, const std::vector<CovarianceSpec>& specs,
                                  int workers = 1) {
  const Eigen::Index p = blocks.front().x.cols();
  std::vector<Mat> xsx(blocks.size());
  std::vector<Vec> xsy(blocks.size());
  std::vector<double> logdet(blocks.size()), ysy(blocks.size());
  parallel_for(blocks.size(), workers, [&](std::size_t d) {
    const numerics::DenseCholesky f(covariance_matrix(blocks[d].locations, specs[d]));
    const Mat xt = f.half_solve(blocks[d].x);
    const Vec yt = f.half_solve(blocks[d].y);
    xsx[d] = xt.transpose() * xt;
    xsy[d] = xt.transpose() * yt;
    ysy[d] = yt.squaredNorm();
    logdet[d] = f.log_determinant();
  });
  Mat a = Mat::Zero(p, p);
  Vec b = Vec::Zero(p);
  double n = 0.0, ld = 0.0, yy = 0.0;
  for (std::size_t d = 0; d < blocks.size(); ++d) {
    a += xsx[d], b += xsy[d], ld += logdet[d], yy += ysy[d];
    n += static_cast<double>(blocks[d].size());
  }
  Eigen::LLT<Mat> gram(a);
  if (gram.info() != Eigen::Success) throw Error("partition: trend design is rank deficient");
  GaussianProfile out;
  out.beta = gram.solve(b);
  out.beta_cov = gram.solve(Mat::Identity(p, p));
  const double quad = yy - b.dot(out.beta);
  out.loglik = -0.5 * (n * kLog2Pi + ld + quad);
  return out;
}

inline double partition_objective(const std::vector<Observations>& blocks, const std::vector<CovarianceSpec>& specs,
                                  const Vec& beta) {
  double s = 0.0;
  for (std::size_t d = 0; d < blocks.size(); ++d) s += block_loglik(blocks[d], specs[d], beta);
  return s;
}

/// Coordinate ascent on the sum of block log-likelihoods: per-block
/// covariance updates at fixed beta, then the pooled GLS beta.
inline PartitionFit partition_fit(const Observations& obs, const Partition& partition,
                                  const PartitionFitOptions& opt = {}, int workers = 1) {
  PartitionFit fit;
  fit.partition = partition;
  for (const auto& idx : partition.members()) {
    if (idx.size() < opt.min_block) throw InsufficientPoints("partition: block has fewer than the minimum sites");
    fit.blocks.push_back(obs.subset(idx));
  }
  fit.beta = obs.x.colPivHouseholderQr().solve(obs.y);
  for (const auto& b : fit.blocks) fit.specs.push_back(default_initial_spec(b));
  double current = partition_objective(fit.blocks, fit.specs, fit.beta);
  fit.history.push_back(current);
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    parallel_for(fit.blocks.size(), workers, [&](std::size_t d) {
      auto profile = [&](const CovarianceSpec& s) {
        GaussianProfile p;
        p.beta = fit.beta;
        p.beta_cov = Mat::Zero(fit.beta.size(), fit.beta.size());
        p.loglik = block_loglik(fit.blocks[d], s, fit.beta);
        return p;
      };
      const auto r = maximize_profile(profile, fit.specs[d], opt.fit);
      fit.specs[d] = r.spec;
    });
    const auto gls = shared_gls(fit.blocks, fit.specs, workers);
    fit.beta = gls.beta;
    fit.beta_cov = gls.beta_cov;
    const double next = gls.loglik;
    fit.history.push_back(next);
    fit.sweeps = sweep + 1;
    const double change = std::abs(next - current) / std::max(1.0, std::abs(next));
    current = next;
    if (change < opt.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.loglik = current;
  if (!fit.converged) throw NonConvergence("partition: coordinate ascent did not settle within the sweep budget");
  return fit;
}

/// Kriging inside the containing block with the shared trend.
inline PredictionResult partition_predict(const PartitionFit& fit, const std::vector<Location>& tests, int workers = 1) {
  PredictionResult out;
  out.method = "partition";
  out.locations = tests;
  out.resize(tests.size());
  std::vector<std::vector<std::size_t>> by_block(fit.blocks.size());
  for (std::size_t t = 0; t < tests.size(); ++t) by_block[fit.partition.locate(tests[t])].push_back(t);
  parallel_for(fit.blocks.size(), workers, [&](std::size_t d) {
    if (by_block[d].empty()) return;
    std::vector<Location> pts;
    for (std::size_t t : by_block[d]) pts.push_back(tests[t]);
    const KrigingSystem sys(fit.blocks[d], fit.specs[d]);
    PredictionResult part;
    sys.predict(pts, fit.beta, fit.beta_cov, part);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(by_block[d][k]);
      out.mean(i) = part.mean(static_cast<Eigen::Index>(k));
      out.se(i) = part.se(static_cast<Eigen::Index>(k));
    }
  });
  out.set_gaussian_intervals();
  return out;
}

inline PredictionResult partition_method(const Observations& obs, const std::vector<Location>& tests,
                                         const PartitionFitOptions& opt = {}, int workers = 1) {
  const auto fit = partition_fit(obs, make_partition(obs.locations, opt.target), opt, workers);
  return partition_predict(fit, tests, workers);
}

// ---------------------------------------------------------------------------
// Metakriging: geometric median of subset predictive distributions.

struct SubsetFit {
  std::vector<std::size_t> indices;
  Observations data;
  CovarianceSpec spec;
  Vec beta;
  Mat beta_cov;
  double df = 0.0;  // subset size minus trend rank
};

struct SubsetPosteriors {
  std::vector<SubsetFit> fits;
  std::size_t samples = 0;  // M per subset per test point
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
  std::size_t size() const { return fits.size(); }
};

/// Student-t draw by Bailey's polar method (uniforms only).
inline double student_t(Rng& rng, double df) {
  for (;;) {
    const double u = rng.uniform(-1.0, 1.0), v = rng.uniform(-1.0, 1.0);
    const double w = u * u + v * v;
    if (w >= 1.0 || w == 0.0) continue;
    return u * std::sqrt(df * (std::pow(w, -2.0 / df) - 1.0) / w);
  }
}

/// K random disjoint subsets (position i of a seeded shuffle goes to subset
/// i mod K), each fitted by ML. Subsets whose fit fails or does not converge
/// are dropped with a warning.
inline SubsetPosteriors subset_fit(const Observations& obs, std::size_t k, std::size_t m, std::uint64_t seed,
                                   const FitOptions& fopt = {}, int workers = 1) {
  if (k == 0 || k * 50 > obs.size()) throw ConfigError("subset_fit: need 1 <= K and 50 K <= N");
  if (m == 0) throw ConfigError("subset_fit: need at least one sample per subset");
  std::vector<std::size_t> perm(obs.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  std::vector<std::vector<std::size_t>> idx(k);
  for (std::size_t i = 0; i < perm.size(); ++i) idx[i % k].push_back(perm[i]);
  for (auto& v : idx) std::sort(v.begin(), v.end());

  std::vector<SubsetFit> fits(k);
  std::vector<std::string> err(k);
  parallel_for(k, workers, [&](std::size_t j) {
    auto& f = fits[j];
    f.indices = idx[j];
    f.data = obs.subset(idx[j]);
    try {
      const auto r = fit_ml(f.data, default_initial_spec(f.data), fopt);
      if (!r.converged) {
        err[j] = "optimizer did not converge";
        return;
      }
      f.spec = r.spec;
      f.beta = r.beta;
      f.beta_cov = r.beta_cov;
      f.df = static_cast<double>(f.data.size() - static_cast<std::size_t>(f.data.x.cols()));
    } catch (const Error& e) {
      err[j] = e.what();
    }
  });
  SubsetPosteriors out;
  out.samples = m;
  out.seed = seed;
  for (std::size_t j = 0; j < k; ++j) {
    if (err[j].empty()) out.fits.push_back(std::move(fits[j]));
    else out.warnings.push_back("subset " + std::to_string(j) + " dropped: " + err[j]);
  }
  if (out.fits.empty()) throw NonConvergence("subset_fit: every subset fit failed");
  return out;
}

/// Plug-in predictive mean and scale of every subset at every test point
/// (K x T each).
struct SubsetMoments {
  Mat mean;
  Mat scale;
};

inline SubsetMoments subset_moments(const SubsetPosteriors& sp, const std::vector<Location>& tests, int workers = 1) {
  SubsetMoments m;
  const auto k = static_cast<Eigen::Index>(sp.size()), t = static_cast<Eigen::Index>(tests.size());
  m.mean.resize(k, t);
  m.scale.resize(k, t);
  parallel_for(sp.size(), workers, [&](std::size_t j) {
    const auto& f = sp.fits[j];
    const KrigingSystem sys(f.data, f.spec);
    PredictionResult p;
    sys.predict(tests, f.beta, f.beta_cov, p);
    m.mean.row(static_cast<Eigen::Index>(j)) = p.mean.transpose();
    m.scale.row(static_cast<Eigen::Index>(j)) = p.se.transpose();
  });
  return m;
}

/// samples[t] is K x M: t-adjusted draws mu + scale * T_df for each subset.
/// Stream (subset j, test t) is seeded independently of the worker count.
inline std::vector<Mat> predictive_samples(const SubsetPosteriors& sp, const SubsetMoments& mom, std::size_t m,
                                           std::uint64_t stream, int workers = 1) {
  const auto t_count = static_cast<std::size_t>(mom.mean.cols());
  std::vector<Mat> out(t_count, Mat(static_cast<Eigen::Index>(sp.size()), static_cast<Eigen::Index>(m)));
  parallel_for(t_count, workers, [&](std::size_t t) {
    for (std::size_t j = 0; j < sp.size(); ++j) {
      Rng rng(derive_seed(derive_seed(derive_seed(sp.seed, stream), j), t));
      const auto jj = static_cast<Eigen::Index>(j), tt = static_cast<Eigen::Index>(t);
      for (std::size_t s = 0; s < m; ++s)
        out[t](jj, static_cast<Eigen::Index>(s)) =
            mom.mean(jj, tt) + mom.scale(jj, tt) * student_t(rng, sp.fits[j].df);
    }
  });
  return out;
}

/// Median of pairwise squared distances between pooled sample vectors.
/// `samples[j]` is M x P: M draws over P probe points.
inline double median_bandwidth(const std::vector<Mat>& samples) {
  std::vector<const Mat*> owner;
  std::vector<Eigen::Index> row;
  for (const auto& s : samples)
    for (Eigen::Index r = 0; r < s.rows(); ++r) owner.push_back(&s), row.push_back(r);
  std::vector<double> d2;
  d2.reserve(owner.size() * (owner.size() - 1) / 2);
  for (std::size_t a = 0; a < owner.size(); ++a)
    for (std::size_t b = a + 1; b < owner.size(); ++b)
      d2.push_back((owner[a]->row(row[a]) - owner[b]->row(row[b])).squaredNorm());
  if (d2.empty()) return 1.0;
  auto mid = d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2);
  std::nth_element(d2.begin(), mid, d2.end());
  return *mid > 0.0 ? *mid : 1.0;
}

/// G(j, k) = mean over sample pairs of exp(-|z_j - z_k|^2 / h): inner products
/// of kernel mean embeddings (V-statistic).
inline Mat kernel_gram(const std::vector<Mat>& samples, double bandwidth, int workers = 1) {
  const std::size_t k = samples.size();
  Mat g(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a; b < k; ++b) pairs.emplace_back(a, b);
  std::vector<double> val(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t q) {
    const auto& x = samples[pairs[q].first];
    const auto& y = samples[pairs[q].second];
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < y.rows(); ++j) s += std::exp(-(x.row(i) - y.row(j)).squaredNorm() / bandwidth);
    val[q] = s / static_cast<double>(x.rows() * y.rows());
  });
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    const auto a = static_cast<Eigen::Index>(pairs[q].first), b = static_cast<Eigen::Index>(pairs[q].second);
    g(a, b) = g(b, a) = val[q];
  }
  return g;
}

struct GMWeights {
  Vec alpha;
  double bandwidth = 1.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective;  // sum_k |p_k - pi| per iterate
};

/// |p_k - pi_alpha| in the embedding space for every k.
inline Vec embedding_distances(const Mat& gram, const Vec& alpha) {
  const Vec ga = gram * alpha;
  const double aga = alpha.dot(ga);
  Vec d(gram.rows());
  for (Eigen::Index k = 0; k < d.size(); ++k) d(k) = std::sqrt(std::max(gram(k, k) - 2.0 * ga(k) + aga, 0.0));
  return d;
}

struct WeiszfeldOptions {
  double tolerance = 1e-8;
  int max_iterations = 500;
};

/// Weiszfeld iteration alpha_k <- |p_k - pi|^{-1} / sum_j |p_j - pi|^{-1}
/// from uniform weights. Returns the last iterate with converged == false
/// when the budget runs out.
inline GMWeights weiszfeld(const Mat& gram, const WeiszfeldOptions& opt = {}) {
  const Eigen::Index k = gram.rows();
  if (k < 1) throw ConfigError("weiszfeld: no subsets");
  GMWeights w;
  w.alpha = Vec::Constant(k, 1.0 / static_cast<double>(k));
  const double floor = 1e-12 * std::sqrt(std::max(gram.diagonal().maxCoeff(), 1e-300));
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const Vec d = embedding_distances(gram, w.alpha);
    w.objective.push_back(d.sum());
    const Vec inv = d.cwiseMax(floor).cwiseInverse();
    const Vec next = inv / inv.sum();
    const double change = (next - w.alpha).cwiseAbs().maxCoeff();
    w.alpha = next;
    w.iterations = it;
    if (change < opt.tolerance) {
      w.converged = true;
      break;
    }
  }
  w.objective.push_back(embedding_distances(gram, w.alpha).sum());
  return w;
}

/// Weights from predictive samples at probe points: `probe_samples[t]` is
/// K x M at probe t (as returned by predictive_samples).
inline GMWeights weiszfeld_weights(const std::vector<Mat>& probe_samples, const WeiszfeldOptions& opt = {},
                                   int workers = 1) {
  if (probe_samples.empty()) throw ConfigError("weiszfeld_weights: no probe points");
  const Eigen::Index k = probe_samples.front().rows(), m = probe_samples.front().cols();
  if (k < 2) throw ConfigError("weiszfeld_weights: need at least two subsets");
  const auto p = static_cast<Eigen::Index>(probe_samples.size());
  std::vector<Mat> per_subset(static_cast<std::size_t>(k), Mat(m, p));
  for (Eigen::Index t = 0; t < p; ++t)
    for (Eigen::Index j = 0; j < k; ++j) per_subset[static_cast<std::size_t>(j)].col(t) = probe_samples[static_cast<std::size_t>(t)].row(j).transpose();
  const double h = median_bandwidth(per_subset);
  auto w = weiszfeld(kernel_gram(per_subset, h, workers), opt);
  w.bandwidth = h;
  return w;
}

/// Quantile of the mixture of empirical sample sets: sample s of component k
/// carries weight alpha_k / M. Smallest sample whose cumulative weight
/// reaches q.
inline double mixture_quantile(const Mat& samples, const Vec& alpha, double q) {
  std::vector<std::pair<double, double>> v;
  v.reserve(static_cast<std::size_t>(samples.size()));
  for (Eigen::Index j = 0; j < samples.rows(); ++j)
    for (Eigen::Index s = 0; s < samples.cols(); ++s)
      v.emplace_back(samples(j, s), alpha(j) / static_cast<double>(samples.cols()));
  std::sort(v.begin(), v.end());
  double c = 0.0;
  for (const auto& [x, wt] : v) {
    c += wt;
    if (c >= q - 1e-12) return x;
  }
  return v.back().first;
}

/// Weighted-mixture median as the point prediction, 2.5/97.5 percentiles as
/// the interval, se from the interval width.
inline PredictionResult metakrige_predict(const std::vector<Mat>& samples, const Vec& alpha,
                                          const std::vector<Location>& tests, int workers = 1) {
  if (samples.size() != tests.size()) throw LengthMismatch("metakrige_predict: one sample matrix per test point");
  PredictionResult out;
  out.method = "metakriging";
  out.locations = tests;
  out.resize(tests.size());
  parallel_for(tests.size(), workers, [&](std::size_t t) {
    const auto i = static_cast<Eigen::Index>(t);
    out.mean(i) = mixture_quantile(samples[t], alpha, 0.5);
    out.lower(i) = mixture_quantile(samples[t], alpha, 0.025);
    out.upper(i) = mixture_quantile(samples[t], alpha, 0.975);
    out.se(i) = scoring::se_from_interval(out.lower(i), out.upper(i));
  });
  return out;
}

struct MetakrigingOptions {
  std::size_t subsets = 10;
  std::size_t samples = 500;           // M per subset per test point
  std::size_t distance_samples = 100;  // draws per subset used for the embedding distances
  std::size_t probes = 200;
  std::uint64_t seed = 1;
  FitOptions fit;
  WeiszfeldOptions weiszfeld;
};

struct MetakrigingResult {
  PredictionResult prediction;
  GMWeights weights;
  std::vector<std::string> warnings;
};

inline MetakrigingResult metakriging(const Observations& obs, const std::vector<Location>& tests,
                                     const MetakrigingOptions& opt = {}, int workers = 1) {
  MetakrigingResult r;
  const auto sp = subset_fit(obs, opt.subsets, opt.samples, opt.seed, opt.fit, workers);
  r.warnings = sp.warnings;
  if (sp.size() == 1) {
    r.weights.alpha = Vec::Ones(1);
    r.weights.converged = true;
  } else {
    // probe sites: a seeded sample of the test locations
    std::vector<std::size_t> order(tests.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(opt.seed, 7));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    std::vector<Location> probes;
    for (std::size_t i = 0; i < std::min(opt.probes, order.size()); ++i) probes.push_back(tests[order[i]]);
    if (probes.empty()) throw EmptyTest("metakriging: no test locations");
    const auto pm = subset_moments(sp, probes, workers);
    const auto ps = predictive_samples(sp, pm, std::min(opt.distance_samples, opt.samples), 1, workers);
    r.weights = weiszfeld_weights(ps, opt.weiszfeld, workers);
    if (!r.weights.converged) r.warnings.push_back("Weiszfeld iteration hit its budget; last iterate used");
  }
  const auto mom = subset_moments(sp, tests, workers);
  const auto samples = predictive_samples(sp, mom, opt.samples, 2, workers);
  r.prediction = metakrige_predict(samples, r.weights.alpha, tests, workers);
  r.prediction.warnings = r.warnings;
  return r;
}

}  // namespace bigspatial::ensemble
