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

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "bigspatial/numerics/random.hpp"
#include "bigspatial/scoring.hpp"
#include "support/oracles.hpp"

using namespace bigspatial;
using namespace bigspatial::scoring;

namespace {

// integral of (F(x) - 1{x >= y})^2 over the real line, by Simpson on each side of y
double crps_by_quadrature(double y, double mu, double sigma) {
  auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0))); };
  const double lo = std::min(y, mu - 14.0 * sigma);
  const double hi = std::max(y, mu + 14.0 * sigma);
  const double left = oracle::simpson([&](double x) { return cdf(x) * cdf(x); }, lo, y, 40000);
  const double right = oracle::simpson([&](double x) { return (1.0 - cdf(x)) * (1.0 - cdf(x)); }, y, hi, 40000);
  return left + right;
}

}  // namespace

TEST(Errors, Examples) {
  const std::vector<double> t{1.0, 2.0};
  EXPECT_EQ(mae(t, t), 0.0);
  EXPECT_EQ(rmse(t, t), 0.0);
  const std::vector<double> p1{0.0, 3.0};
  EXPECT_DOUBLE_EQ(mae(t, p1), 1.0);
  EXPECT_DOUBLE_EQ(rmse(t, p1), 1.0);
  const std::vector<double> p2{1.0, 0.0};
  EXPECT_DOUBLE_EQ(mae(t, p2), 1.0);
  EXPECT_DOUBLE_EQ(rmse(t, p2), std::sqrt(2.0));
  EXPECT_THROW(mae(t, std::vector<double>{1.0}), LengthMismatch);
  EXPECT_THROW(rmse(std::vector<double>{}, std::vector<double>{}), LengthMismatch);
}

TEST(Errors, MaeNeverExceedsRmse) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(50);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.normal() * 5;
      b[i] = rng.normal() * 5;
    }
    EXPECT_LE(mae(a, b), rmse(a, b) * (1 + 1e-15));
  }
}

TEST(Crps, Examples) {
  EXPECT_NEAR(crps_gaussian(0.0, 0.0, 1.0), 0.2336950, 5e-8);
  EXPECT_EQ(crps_gaussian(3.5, 1.25, 0.0), 2.25);
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const double y = rng.normal(), mu = rng.normal(), s = rng.uniform(0.1, 3), c = rng.uniform(0.1, 10);
    EXPECT_NEAR(crps_gaussian(c * y, c * mu, c * s), c * crps_gaussian(y, mu, s), 1e-12 * c);
  }
}

TEST(Crps, MatchesNumericalIntegration) {
  Rng rng(2016);
  for (int i = 0; i < 100; ++i) {
    const double mu = rng.uniform(-5, 5), sigma = rng.uniform(0.05, 4.0);
    const double y = mu + sigma * rng.uniform(-4, 4);
    EXPECT_NEAR(crps_gaussian(y, mu, sigma), crps_by_quadrature(y, mu, sigma), 1e-8) << y << " " << mu << " " << sigma;
  }
}

TEST(Crps, MinimizedAtTruth) {
  for (double sigma : {0.3, 1.0, 2.5}) {
    const double y = 1.7;
    const double at = crps_gaussian(y, y, sigma);
    for (double mu = -3; mu <= 6; mu += 0.01) EXPECT_GE(crps_gaussian(y, mu, sigma) + 1e-15, at);
  }
}

TEST(IntervalScore, Examples) {
  EXPECT_DOUBLE_EQ(interval_score(-1.0, 2.0, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(interval_score(-1.96, 1.96, 2.96), 43.92);
  EXPECT_DOUBLE_EQ(interval_score(-1.96, 1.96, -2.96), 43.92);
  EXPECT_LT(interval_score(-1.0, 1.0, 0.5), interval_score(-1.1, 1.0, 0.5));
  EXPECT_LT(interval_score(-1.0, 1.0, 0.5), interval_score(-1.0, 1.2, 0.5));
  EXPECT_THROW(interval_score(1.0, 0.0, 0.5), InvalidInterval);
}

TEST(IntervalScore, MatchesDirectDefinition) {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const double a = rng.normal() * 3, b = rng.normal() * 3, y = rng.normal() * 4;
    const double l = std::min(a, b), u = std::max(a, b);
    double expected = u - l;
    if (y < l) expected += 40.0 * (l - y);
    if (y > u) expected += 40.0 * (y - u);
    EXPECT_EQ(interval_score(l, u, y), expected);
  }
}

TEST(IntervalScore, WidthOnlyAtNominalRate) {
  Rng rng(11);
  const int draws = 10000;
  int width_only = 0;
  for (int i = 0; i < draws; ++i) {
    const double mu = rng.normal(), sigma = rng.uniform(0.5, 2.0);
    const double y = mu + sigma * rng.normal();
    const double l = mu - kNormal975 * sigma, u = mu + kNormal975 * sigma;
    width_only += interval_score(l, u, y) == u - l ? 1 : 0;
  }
  EXPECT_NEAR(double(width_only) / draws, 0.95, 0.02);
}

TEST(Coverage, Examples) {
  const std::vector<double> l{0, 0, 0, 0}, u{1, 1, 1, 1};
  EXPECT_EQ(coverage(l, u, std::vector<double>{0.5, 0.0, 1.0, 0.2}), 1.0);
  EXPECT_EQ(coverage(l, u, std::vector<double>{-1, 2, 3, -0.1}), 0.0);
  EXPECT_EQ(coverage(l, u, std::vector<double>{0.5, 2, 0.3, -0.1}), 0.5);
  EXPECT_THROW(coverage(l, u, std::vector<double>{0.5}), LengthMismatch);
}

TEST(Coverage, MatchesDirectDefinition) {
  Rng rng(4);
  std::vector<double> l(300), u(300), y(300);
  int hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    l[i] = rng.normal();
    u[i] = l[i] + rng.uniform(0, 2);
    y[i] = rng.normal();
    hits += (l[i] <= y[i] && y[i] <= u[i]) ? 1 : 0;
  }
  EXPECT_EQ(coverage(l, u, y), double(hits) / 300.0);
}

TEST(SeFromInterval, Examples) {
  EXPECT_NEAR(se_from_interval(0.0, 3.9199280), 1.0, 1e-15);
  EXPECT_EQ(se_from_interval(2.0, 2.0), 0.0);
  for (double sigma : {0.01, 1.0, 7.5}) {
    const double mu = 3.0;
    EXPECT_NEAR(se_from_interval(mu - 1.96 * sigma, mu + 1.96 * sigma), sigma, 3e-4 * sigma);
  }
  EXPECT_THROW(se_from_interval(1.0, 0.0), InvalidInterval);
}

TEST(Score, CombinesMetrics) {
  PredictionResult p;
  p.method = "m";
  p.locations.resize(3);
  p.resize(3);
  p.mean << 0.0, 1.0, 2.0;
  p.se << 1.0, 1.0, 0.0;
  p.set_gaussian_intervals();
  p.wall_seconds = 90;
  const std::vector<double> truth{0.0, 3.0, 2.0};
  const auto r = score(truth, p);
  EXPECT_DOUBLE_EQ(r.mae, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.rmse, std::sqrt(4.0 / 3.0));
  EXPECT_DOUBLE_EQ(r.coverage, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.minutes, 1.5);
  EXPECT_NEAR(r.crps, (crps_gaussian(0, 0, 1) + crps_gaussian(3, 1, 1)) / 3.0, 1e-15);
  EXPECT_GE(r.interval, 0.0);
}
