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

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "bigspatial/basis.hpp"
#include "support/oracles.hpp"

using namespace bigspatial;
using namespace bigspatial::basis;

namespace {

Observations noisy_field(std::size_t n, std::uint64_t seed, double w = 2.0, double h = 1.5,
                         TrendKind kind = TrendKind::constant) {
  auto locs = oracle::random_points(n, seed, w, h);
  const Mat c = oracle::covariance(locs, 2.0, 0.4, 0.3);
  const Mat l = c.llt().matrixL();
  Rng rng(seed + 17);
  Vec z(static_cast<Eigen::Index>(n));
  for (auto& v : z) v = rng.normal();
  return make_observations(locs, Vec((l * z).array() + 5.0), kind);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1.0); }

// S = H P^{-1} H' + diag(d) written out in full.
Mat dense_low_rank(const Mat& h, const Mat& prec, const Vec& d) {
  Mat s = h * prec.inverse() * h.transpose();
  s.diagonal() += d;
  return s;
}

// Fisher standard error of the range from one draw theta ~ N(0, v exp(-d / phi)).
double range_standard_error(const std::vector<Location>& c, double v, double phi) {
  const auto n = static_cast<Eigen::Index>(c.size());
  Mat e(n, n), dphi(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = distance(c[static_cast<std::size_t>(i)], c[static_cast<std::size_t>(j)]);
      e(i, j) = std::exp(-d / phi);
      dphi(i, j) = v * e(i, j) * d / (phi * phi);
    }
  const Mat inv = (v * e).inverse();
  const Mat a = inv * e, b = inv * dphi;
  Mat f(2, 2);
  f << 0.5 * (a * a).trace(), 0.5 * (a * b).trace(), 0.5 * (a * b).trace(), 0.5 * (b * b).trace();
  return std::sqrt(f.inverse()(1, 1));
}

}  // namespace

TEST(BasisFunctions, Bisquare) {
  EXPECT_EQ(eval_bisquare(0.0, 2.0), 1.0);
  EXPECT_EQ(eval_bisquare(2.0, 2.0), 0.0);
  EXPECT_NEAR(eval_bisquare(2.0 - 1e-9, 2.0), 0.0, 1e-16);
  EXPECT_DOUBLE_EQ(eval_bisquare(1.0, 2.0), 0.5625);
  EXPECT_EQ(eval_bisquare(3.0, 2.0), 0.0);
}

TEST(BasisFunctions, Wendland) {
  EXPECT_DOUBLE_EQ(eval_wendland(0.0), 1.0);
  EXPECT_EQ(eval_wendland(1.0), 0.0);
  EXPECT_NEAR(eval_wendland(0.5), 0.108073, 5e-7);
  EXPECT_NEAR(eval_wendland(0.5), std::pow(0.5, 6) * 20.75 / 3.0, 1e-15);
  EXPECT_EQ(eval_wendland(1.5), 0.0);
  double prev = 1.0;
  for (double d = 0.01; d < 1.0; d += 0.01) {
    EXPECT_LT(eval_wendland(d), prev);
    prev = eval_wendland(d);
  }
}

TEST(BuildBasis, SingleResolutionCoversInterior) {
  const BoundingBox unit{0, 1, 0, 1};
  const auto b = build_basis(unit, 1, Family::wendland, 0.5, 0.0, 2.0);
  ASSERT_EQ(b.size(), 4u);
  EXPECT_DOUBLE_EQ(b.levels[0].support, 1.0);
  const auto pts = oracle::random_points(200, 3);
  const SparseMatrix h = b.evaluate(pts);
  const Mat hd(h);
  for (Eigen::Index i = 0; i < hd.rows(); ++i) EXPECT_GT(hd.row(i).sum(), 0.0);
}

TEST(BuildBasis, RefinementQuadruplesCenters) {
  const auto b = build_basis(GridGeometry::desk_scale(), 4, Family::bisquare, 1.1, 0.2, 1.5);
  for (std::size_t r = 1; r < b.resolutions(); ++r) {
    EXPECT_EQ(b.levels[r].size(), 4 * b.levels[r - 1].size());
    EXPECT_DOUBLE_EQ(b.levels[r].spacing, 0.5 * b.levels[r - 1].spacing);
  }
  const auto frk = build_basis(GridGeometry::desk_scale(), 3, Family::bisquare, FrkOptions{}.coarsest_spacing, 0.0, 1.5);
  EXPECT_EQ(frk.size(), 84u);
}

TEST(BuildBasis, EvaluationMatchesDirectSum) {
  const auto b = build_basis(BoundingBox{0, 2, 0, 1}, 2, Family::bisquare, 0.5, 0.1, 1.5);
  const auto pts = oracle::random_points(50, 9, 2.0, 1.0);
  const Mat h(b.evaluate(pts));
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t k = 0; k < b.levels[r].size(); ++k) {
        const double d = distance(pts[i], b.levels[r].center(k));
        const double expected = d < b.levels[r].support ? std::pow(1 - std::pow(d / b.levels[r].support, 2), 2) : 0.0;
        EXPECT_NEAR(h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b.offset(r) + k)), expected, 1e-15);
      }
}

TEST(BuildBasis, SparsityMatchesSupportFraction) {
  const BoundingBox box{0, 4, 0, 3};
  const auto b = build_basis(box, 1, Family::wendland, 0.25, 0.0, 0.6);
  const auto pts = oracle::random_points(4000, 12, 4.0, 3.0);
  const SparseMatrix h = b.evaluate(pts);
  const double ratio = double(h.nonZeros()) / double(h.rows() * h.cols());
  // expected fraction: area of each support disk inside the box, by midpoint quadrature
  const auto& l = b.levels[0];
  double area = 0.0;
  const int g = 400;
  for (std::size_t k = 0; k < l.size(); ++k) {
    const auto c = l.center(k);
    const double a = l.support;
    const double cell = 2 * a / g;
    int inside = 0;
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j) {
        const double x = c.lon - a + (i + 0.5) * cell, y = c.lat - a + (j + 0.5) * cell;
        if ((x - c.lon) * (x - c.lon) + (y - c.lat) * (y - c.lat) < a * a && box.contains({x, y})) ++inside;
      }
    area += inside * cell * cell;
  }
  const double expected = area / (12.0 * double(l.size()));
  EXPECT_NEAR(ratio, expected, 0.1 * expected);
}

TEST(LatticeKrig, NormalizationGivesConstantMarginalVariance) {
  const BoundingBox box{0, 3, 0, 2};
  const auto b = build_basis(box, 3, Family::wendland, 0.5, 0.5, 2.5);
  const LatticeKrigParams p{2.5, 0.1, 0.4, 1.3};
  std::vector<Location> grid;
  for (int i = 0; i <= 30; ++i)
    for (int j = 0; j <= 20; ++j) grid.push_back({0.1 * i, 0.1 * j});
  const LatticeKrigModel m(b, grid);
  const SparseMatrix h = m.normalized(p, m.factors(p.kappa));
  const auto alpha = lk_weights(3, p.nu);
  EXPECT_NEAR(std::accumulate(alpha.begin(), alpha.end(), 0.0), 1.0, 1e-15);
  for (std::size_t r = 0; r < 3; ++r) {
    const Mat q(lk_precision(b.levels[r], p.kappa));
    const Mat qinv = q.inverse();
    const Mat hr = Mat(h).middleCols(static_cast<Eigen::Index>(b.offset(r)), static_cast<Eigen::Index>(b.levels[r].size()));
    for (Eigen::Index i = 0; i < hr.rows(); ++i) {
      const double v = hr.row(i) * qinv * hr.row(i).transpose();
      EXPECT_NEAR(v, p.partial_sill * alpha[r], 1e-8 * p.partial_sill);
    }
  }
}

TEST(LatticeKrig, PrecisionIsSarSquare) {
  Resolution l;
  l.nx = 4;
  l.ny = 3;
  const Mat q(lk_precision(l, 0.5));
  Mat b = Mat::Zero(12, 12);
  for (int iy = 0; iy < 3; ++iy)
    for (int ix = 0; ix < 4; ++ix) {
      const int k = iy * 4 + ix;
      b(k, k) = 4.25;
      if (ix > 0) b(k, k - 1) = -1;
      if (ix < 3) b(k, k + 1) = -1;
      if (iy > 0) b(k, k - 4) = -1;
      if (iy < 2) b(k, k + 4) = -1;
    }
  EXPECT_LT((q - b.transpose() * b).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat>(q).eigenvalues().minCoeff(), 0.0);
}

TEST(Woodbury, FrkLikelihoodMatchesDenseEvaluation) {
  const auto obs = noisy_field(400, 1);
  const auto b = build_basis(bounding_box(obs.locations), 2, Family::bisquare, 0.6, 0.0, 1.5);
  ASSERT_GE(b.size(), 20u);
  const FrkParams p{{1.2, 0.4}, {0.8, 0.3}, 0.35, 0.0};
  const Mat h(b.evaluate(obs.locations));
  auto [prec, logdet] = frk_precision(b, p);
  const Mat s = dense_low_rank(h, prec, Vec::Constant(400, 0.35));
  const double expected = oracle::naive_profile_loglik(s, obs.y, obs.x);
  EXPECT_LT(rel(frk_loglik(obs, b, p), expected), 1e-8);
  EXPECT_NEAR(logdet, -std::log(prec.inverse().determinant()), 1e-8 * std::abs(logdet));
}

TEST(Woodbury, LatticeKrigLikelihoodMatchesDenseEvaluation) {
  const auto obs = noisy_field(400, 2, 2.0, 1.5, TrendKind::linear_lon_lat);
  const auto b = build_basis(bounding_box(obs.locations), 2, Family::wendland, 0.4, 0.4, 2.5);
  const LatticeKrigParams p{1.8, 0.25, 0.5, 0.7};
  const LatticeKrigModel m(b, obs.locations);
  const auto f = m.factors(p.kappa);
  const Mat h(m.normalized(p, f));
  const Mat q(LatticeKrigModel::precision(b, p.kappa, f).first);
  const double expected = oracle::naive_profile_loglik(dense_low_rank(h, q, Vec::Constant(400, 0.25)), obs.y, obs.x);
  EXPECT_LT(rel(lk_loglik(obs, b, p, 100000), expected), 1e-8);  // dense factor of M
  EXPECT_LT(rel(lk_loglik(obs, b, p, 0), expected), 1e-8);       // sparse factor of M
}

TEST(Woodbury, LowRankPredictionMatchesConditionalGaussian) {
  const auto obs = noisy_field(400, 3);
  const auto b = build_basis(bounding_box(obs.locations), 2, Family::bisquare, 0.9, 0.0, 1.5);
  const FrkParams p{{1.5, 0.5}, {0.7, 0.2}, 0.3, 0.0};
  const Mat h(b.evaluate(obs.locations));
  auto [prec, logdet] = frk_precision(b, p);
  const Mat s = dense_low_rank(h, prec, Vec::Constant(400, 0.3));
  Vec beta;
  oracle::naive_profile_loglik(s, obs.y, obs.x, &beta);
  const Mat bc = (obs.x.transpose() * s.inverse() * obs.x).inverse();
  const auto tests = oracle::random_points(25, 33, 2.0, 1.5);
  const auto out = frk_predict(b, p, obs, beta, bc, tests);
  const Mat h0(b.evaluate(tests));
  for (std::size_t t = 0; t < tests.size(); ++t) {
    const auto tt = static_cast<Eigen::Index>(t);
    const Vec c = h * prec.inverse() * h0.row(tt).transpose();
    const double c00 = h0.row(tt) * prec.inverse() * h0.row(tt).transpose() + 0.3;
    const auto [m, v] = oracle::naive_krige(s, c, c00, obs.y, obs.x, Eigen::RowVectorXd::Ones(1));
    EXPECT_NEAR(out.mean(tt), m, 1e-6);
    EXPECT_NEAR(out.se(tt) * out.se(tt), v, 1e-6);
  }
}

TEST(LatticeKrig, ZeroSillCollapsesToTrend) {
  const auto obs = noisy_field(150, 4, 2.0, 1.5, TrendKind::linear_lon_lat);
  const auto b = build_basis(bounding_box(obs.locations), 2, Family::wendland, 0.5, 0.5, 2.5);
  const LatticeKrigParams p{0.0, 0.5, 0.3, 1.0};
  const auto prof = lk_profile(obs, b, p);
  const Vec ols = obs.x.colPivHouseholderQr().solve(obs.y);
  EXPECT_LT((prof.beta - ols).cwiseAbs().maxCoeff(), 1e-9);
  const auto tests = oracle::random_points(20, 5, 2.0, 1.5);
  const auto out = lk_predict(b, p, obs, prof.beta, prof.beta_cov, tests);
  TrendSpec t;
  t.kind = TrendKind::linear_lon_lat;
  const Vec trend = t.design(tests) * prof.beta;
  EXPECT_LT((out.mean - trend).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(LatticeKrig, FitImprovesLikelihoodAndPredictsSensibly) {
  const auto obs = noisy_field(500, 6);
  LatticeKrigOptions opt;
  opt.coarsest_spacing = 0.5;
  opt.margin = 0.5;
  const auto fit = lk_fit(obs, opt);
  EXPECT_GE(fit.loglik, fit.initial_loglik);
  EXPECT_GT(fit.params.partial_sill, 0.0);
  const auto out = lk_predict(fit, {obs.locations[0], {50.0, 50.0}});
  EXPECT_TRUE(out.se.allFinite());
  EXPECT_LT(std::abs(out.mean(0) - obs.y(0)), 2.0);
  // far outside the lattice only the trend and the nugget remain
  EXPECT_NEAR(out.mean(1), fit.beta(0), 1e-9);
  EXPECT_NEAR(out.se(1) * out.se(1), fit.params.nugget + fit.beta_cov(0, 0), 1e-9);
}

TEST(Frk, FarFieldRevertsToTrend) {
  const auto obs = noisy_field(200, 7);
  const auto b = build_basis(bounding_box(obs.locations), 2, Family::bisquare, 0.8, 0.0, 1.5);
  const FrkParams p{{1.0, 0.5}, {0.5, 0.3}, 0.4, 0.0};
  const Mat h(b.evaluate(obs.locations));
  const auto prof = frk_system(h, b, p).profile(obs.y, obs.x);
  const auto out = frk_predict(b, p, obs, prof.beta, prof.beta_cov, {{40.0, 40.0}});
  EXPECT_NEAR(out.mean(0), prof.beta(0), 1e-12);
  EXPECT_NEAR(out.se(0) * out.se(0), 0.4 + prof.beta_cov(0, 0), 1e-12);
}

TEST(Frk, RecoversResolutionRanges) {
  // data drawn exactly from the model: y = 44 + H theta + eps
  const auto g = GridGeometry::desk_scale();
  std::vector<Location> all;
  for (std::size_t i = 0; i < g.cell_count(); ++i) all.push_back(g.center(i));
  Rng pick(41);
  std::vector<std::size_t> idx(all.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i + 1 < idx.size(); ++i) std::swap(idx[i], idx[i + pick.below(idx.size() - i)]);
  idx.resize(5000);
  std::sort(idx.begin(), idx.end());
  std::vector<Location> locs;
  for (auto i : idx) locs.push_back(all[i]);

  FrkOptions opt;
  opt.domain = g.extent;
  const auto b = build_basis(g.extent, 3, Family::bisquare, opt.coarsest_spacing, 0.0, 1.5);
  const FrkParams truth{{6.0, 3.0, 1.5}, {4.0, 1.0, 0.5}, 0.25, 0.0};
  Rng rng(20160804);
  Vec theta(static_cast<Eigen::Index>(b.size()));
  for (std::size_t r = 0; r < 3; ++r) {
    const auto c = b.levels[r].centers();
    const Mat l = Mat(covariance_matrix(c, {truth.variance[r], truth.range[r], 0.0})).llt().matrixL();
    Vec z(static_cast<Eigen::Index>(c.size()));
    for (auto& v : z) v = rng.normal();
    theta.segment(static_cast<Eigen::Index>(b.offset(r)), z.size()) = l * z;
  }
  Vec y = Mat(b.evaluate(locs)) * theta;
  for (auto& v : y) v += 44.0 + 0.5 * rng.normal();
  const auto obs = make_observations(locs, y, TrendKind::constant);

  const auto fit = frk_fit(obs, opt);
  EXPECT_EQ(fit.basis.size(), 84u);
  EXPECT_GE(fit.loglik, frk_loglik(obs, b, truth));
  EXPECT_NEAR(fit.params.diagonal(), 0.25, 0.25 * 0.25);
  EXPECT_NEAR(fit.params.range[2], truth.range[2], 0.3 * truth.range[2]);
  // Coarse levels carry 4 and 16 coefficients. Even with theta observed
  // directly their range standard error exceeds 30%, so they are held to
  // three Fisher standard errors instead.
  for (std::size_t r = 0; r < 2; ++r) {
    const double se = range_standard_error(b.levels[r].centers(), truth.variance[r], truth.range[r]);
    EXPECT_GT(se, 0.3 * truth.range[r]);
    EXPECT_NEAR(fit.params.range[r], truth.range[r], 3.0 * se);
  }
}

TEST(PredictiveProcess, SaturatedKnotsEqualExactLikelihood) {
  const auto obs = noisy_field(300, 8);
  const CovarianceSpec s{2.0, 0.4, 0.3};
  EXPECT_LT(rel(pp_loglik(obs, obs.locations, s, true), loglik(obs, s)), 1e-8);
  EXPECT_LT(rel(pp_loglik(obs, obs.locations, s, false), loglik(obs, s)), 1e-8);
}

TEST(PredictiveProcess, SaturatedKnotsWithoutNuggetMatchExactKriging) {
  const auto obs = noisy_field(120, 9);
  const CovarianceSpec s{2.0, 0.4, 0.0};
  PredictiveProcessFit fit;
  fit.knots = obs.locations;
  fit.spec = s;
  fit.train = obs;
  const auto prof = exact_profile(obs, s);
  fit.beta = prof.beta;
  fit.beta_cov = prof.beta_cov;
  const auto tests = oracle::random_points(30, 10, 2.0, 1.5);
  const auto pp = pp_predict(fit, tests);
  const auto ex = krige(obs, tests, s);
  EXPECT_LT((pp.mean - ex.mean).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((pp.se - ex.se).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(PredictiveProcess, InducedBasisProperties) {
  const CovarianceSpec s{3.0, 0.5, 0.2};
  const std::vector<Location> one{{1.0, 0.5}};
  const auto pts = oracle::random_points(200, 11, 2.0, 1.0);
  const Mat h1 = pp_build(one, s, pts);
  for (std::size_t i = 0; i < pts.size(); ++i)
    EXPECT_NEAR(h1(static_cast<Eigen::Index>(i), 0), std::exp(-distance(pts[i], one[0]) / 0.5), 1e-12);
  EXPECT_NEAR(pp_build(one, s, one)(0, 0), 1.0, 1e-14);

  const auto knots = grid_knots(oracle::random_points(500, 12, 2.0, 1.0), 5);
  ASSERT_EQ(knots.size(), 25u);
  const auto probe = oracle::random_points(1000, 13, 2.0, 1.0);
  const numerics::DenseCholesky kf(covariance_matrix(knots, {3.0, 0.5, 0.0}));
  const auto t = pp_terms(knots, s, kf, probe);
  const Mat hb = pp_build(knots, s, probe);
  for (Eigen::Index i = 0; i < 1000; ++i) {
    const double var_pp = hb.row(i).dot(t.cross.row(i));
    EXPECT_LE(var_pp, s.partial_sill + 1e-10);
    EXPECT_GE(t.deficit(i), -1e-10);
    // modified process: latent variance restored exactly
    EXPECT_NEAR(var_pp + t.deficit(i) - s.partial_sill, 0.0, 1e-10);
  }
}

TEST(PredictiveProcess, WoodburyMatchesDenseEvaluationAndPrediction) {
  const auto obs = noisy_field(400, 14);
  const auto knots = grid_knots(obs.locations, 5);
  const CovarianceSpec s{2.0, 0.4, 0.3};
  const Mat c = cross_covariance(obs.locations, knots, {2.0, 0.4, 0.0});
  const Mat ss = covariance_matrix(knots, {2.0, 0.4, 0.0});
  const Mat lowrank = c * ss.inverse() * c.transpose();
  Mat sigma = lowrank;
  for (Eigen::Index i = 0; i < sigma.rows(); ++i) sigma(i, i) = 2.0 + 0.3;
  EXPECT_LT(rel(pp_loglik(obs, knots, s, true), oracle::naive_profile_loglik(sigma, obs.y, obs.x)), 1e-8);

  PredictiveProcessFit fit;
  fit.knots = knots;
  fit.spec = s;
  fit.train = obs;
  Vec beta;
  oracle::naive_profile_loglik(sigma, obs.y, obs.x, &beta);
  fit.beta = beta;
  fit.beta_cov = (obs.x.transpose() * sigma.inverse() * obs.x).inverse();
  const auto tests = oracle::random_points(20, 15, 2.0, 1.5);
  const auto out = pp_predict(fit, tests);
  const Mat c0 = cross_covariance(tests, knots, {2.0, 0.4, 0.0});
  for (Eigen::Index t = 0; t < 20; ++t) {
    const Vec cv = c * ss.inverse() * c0.row(t).transpose();
    const auto [m, v] = oracle::naive_krige(sigma, cv, 2.3, obs.y, obs.x, Eigen::RowVectorXd::Ones(1));
    EXPECT_NEAR(out.mean(t), m, 1e-8);
    EXPECT_NEAR(out.se(t) * out.se(t), v, 1e-8);
  }
}

TEST(PredictiveProcess, SmallKnotSetStaysCloseToExactKriging) {
  const auto desk = GridGeometry::desk_scale();
  GridGeometry g{40, 50, {}};
  g.extent = {desk.extent.lon_min, desk.extent.lon_min + 49 * desk.lon_step(), desk.extent.lat_max - 39 * desk.lat_step(), desk.extent.lat_max};
  TrendSpec trend;
  trend.coefficients = Vec::Constant(1, 44.0);
  const auto data = simulate_gp(g, {9.0, 1.5, 0.25}, trend, 77);
  const auto all = observations(data);
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < all.size(); ++i) (i % 5 == 2 ? test_idx : train_idx).push_back(i);
  const auto train = all.subset(train_idx);
  const auto test = all.subset(test_idx);
  const auto init = default_initial_spec(train);
  const auto exact_fit = fit_ml(train, init);
  const auto ex = krige(train, test.locations, exact_fit.spec);
  const auto [pfit, pp] = pp_fit_predict(train, test.locations, init);
  EXPECT_EQ(pfit.knots.size(), 25u);
  EXPECT_GE(pfit.loglik, pfit.initial_loglik);
  const double rmse_ex = std::sqrt((ex.mean - test.y).squaredNorm() / double(test.size()));
  const double rmse_pp = std::sqrt((pp.mean - test.y).squaredNorm() / double(test.size()));
  EXPECT_LT(rmse_pp, 2.0 * rmse_ex);
}

TEST(PredictiveProcess, KmeansKnotsAreDeterministicAndDistinct) {
  const auto pts = oracle::random_points(300, 16, 2.0, 1.0);
  const auto a = kmeans_knots(pts, 16, 3), b = kmeans_knots(pts, 16, 3);
  ASSERT_EQ(a.size(), 16u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i], b[i]);
    for (std::size_t j = 0; j < i; ++j) EXPECT_GT(distance(a[i], a[j]), 0.0);
  }
}
