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
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "bigspatial/dataset.hpp"
#include "bigspatial/errors.hpp"

namespace bigspatial {

/// One row of the competition table.
struct ScoreReport {
  std::string method;
  double mae = 0.0, rmse = 0.0, crps = 0.0, interval = 0.0, coverage = 0.0;
  double minutes = 0.0;
  int cores = 1;
  bool failed = false;
  std::string message;
};

namespace scoring {

namespace detail {

// Pairwise summation with a fixed split so the result does not depend on
// how the caller produced the terms.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline double mean_of(const std::vector<double>& terms) {
  return pairwise_sum(terms.data(), terms.size()) / static_cast<double>(terms.size());
}

inline void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw LengthMismatch(std::string(what) + ": length mismatch");
  if (a == 0) throw LengthMismatch(std::string(what) + ": empty input");
}

}  // namespace detail

/// Interval half-width divisor: 2 * 1.9599640.
inline constexpr double kIntervalZ = 1.9599640;

inline double mae(std::span<const double> truth, std::span<const double> pred) {
  detail::check_lengths(truth.size(), pred.size(), "mae");
  std::vector<double> t(truth.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::abs(truth[i] - pred[i]);
  return detail::mean_of(t);
}

inline double rmse(std::span<const double> truth, std::span<const double> pred) {
  detail::check_lengths(truth.size(), pred.size(), "rmse");
  std::vector<double> t(truth.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = (truth[i] - pred[i]) * (truth[i] - pred[i]);
  return std::sqrt(detail::mean_of(t));
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

/// Closed-form CRPS of N(mu, sigma^2) at y.
inline double crps_gaussian(double y, double mu, double sigma) {
  if (sigma <= 0.0) return std::abs(y - mu);
  const double z = (y - mu) / sigma;
  return sigma * (z * (2.0 * normal_cdf(z) - 1.0) + 2.0 * normal_pdf(z) - 1.0 / std::sqrt(std::numbers::pi));
}

/// Interval score of the central (1 - alpha) interval [l, u].
inline double interval_score(double l, double u, double y, double alpha = 0.05) {
  if (l > u) throw InvalidInterval("interval_score: lower bound exceeds upper bound");
  double s = u - l;
  if (y < l) s += 2.0 / alpha * (l - y);
  if (y > u) s += 2.0 / alpha * (y - u);
  return s;
}

/// Fraction of intervals containing the truth, endpoints inclusive.
inline double coverage(std::span<const double> l, std::span<const double> u, std::span<const double> y) {
  detail::check_lengths(l.size(), y.size(), "coverage");
  detail::check_lengths(u.size(), y.size(), "coverage");
  std::vector<double> t(y.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = (l[i] <= y[i] && y[i] <= u[i]) ? 1.0 : 0.0;
  return detail::mean_of(t);
}

inline double se_from_interval(double l, double u) {
  if (u < l) throw InvalidInterval("se_from_interval: upper bound below lower bound");
  return (u - l) / (2.0 * kIntervalZ);
}

inline std::span<const double> as_span(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

/// Scores a prediction against held-out truth. The Gaussian CRPS uses the
/// reported standard errors.
inline ScoreReport score(const std::vector<double>& truth, const PredictionResult& p, double alpha = 0.05) {
  detail::check_lengths(truth.size(), static_cast<std::size_t>(p.mean.size()), "score");
  ScoreReport r;
  r.method = p.method;
  r.minutes = p.wall_seconds / 60.0;
  r.cores = p.cores;
  r.mae = mae(truth, as_span(p.mean));
  r.rmse = rmse(truth, as_span(p.mean));
  std::vector<double> c(truth.size()), is(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    c[i] = crps_gaussian(truth[i], p.mean(k), p.se(k));
    is[i] = interval_score(p.lower(k), p.upper(k), truth[i], alpha);
  }
  r.crps = detail::mean_of(c);
  r.interval = detail::mean_of(is);
  r.coverage = coverage(as_span(p.lower), as_span(p.upper), truth);
  return r;
}

}  // namespace scoring
}  // namespace bigspatial
