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
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "bigspatial/gpcore.hpp"
#include "bigspatial/scoring.hpp"
#include "bigspatial/spectral.hpp"
#include "support/oracles.hpp"

using namespace bigspatial;
using namespace bigspatial::spectral;

namespace {

SpectralModel model_with(LatticeDims d, std::vector<double> f) {
  SpectralModel m;
  m.original = d;
  m.expanded = d;
  m.tau = 1.0;
  m.f = std::move(f);
  return m;
}

// Smooth, even, strictly positive spectrum.
std::vector<double> smooth_spectrum(LatticeDims d, double floor_value = 0.1) {
  std::vector<double> f(d.size());
  for (std::size_t a = 0; a < d.rows; ++a)
    for (std::size_t b = 0; b < d.cols; ++b) {
      const double s1 = std::sin(std::numbers::pi * static_cast<double>(a) / static_cast<double>(d.rows));
      const double s2 = std::sin(std::numbers::pi * static_cast<double>(b) / static_cast<double>(d.cols));
      f[a * d.cols + b] = 1.0 / (floor_value + s1 * s1 + s2 * s2);
    }
  return f;
}

// R(h) by direct summation over the Fourier grid.
double direct_cov(const SpectralModel& m, long dr, long dc) {
  std::complex<double> acc = 0.0;
  const auto& d = m.expanded;
  for (std::size_t a = 0; a < d.rows; ++a)
    for (std::size_t b = 0; b < d.cols; ++b) {
      const double ang = 2.0 * std::numbers::pi *
                         (static_cast<double>(a) * static_cast<double>(dr) / static_cast<double>(d.rows) +
                          static_cast<double>(b) * static_cast<double>(dc) / static_cast<double>(d.cols));
      acc += m.f[a * d.cols + b] * std::polar(1.0, ang);
    }
  return acc.real() / static_cast<double>(d.size());
}

Mat dense_cov(const SpectralModel& m) {
  const auto& d = m.expanded;
  const auto n = static_cast<Eigen::Index>(d.size());
  Mat r(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
      r(i, j) = direct_cov(m, static_cast<long>(ui / d.cols) - static_cast<long>(uj / d.cols),
                           static_cast<long>(ui % d.cols) - static_cast<long>(uj % d.cols));
    }
  return r;
}

bool conjugate_symmetric(const LatticeDims& d, const std::vector<double>& f, double tol) {
  for (std::size_t a = 0; a < d.rows; ++a)
    for (std::size_t b = 0; b < d.cols; ++b) {
      const std::size_t na = (d.rows - a) % d.rows, nb = (d.cols - b) % d.cols;
      if (std::abs(f[a * d.cols + b] - f[na * d.cols + nb]) > tol * (1.0 + std::abs(f[a * d.cols + b]))) return false;
    }
  return true;
}

struct GapCase {
  SpatialDataset train;
  std::vector<Location> tests;
  Vec truth;
};

// Desk-scale simulation with a random fraction of cells held out.
GapCase gap_case(const CovarianceSpec& spec, double missing, std::uint64_t seed) {
  TrendSpec trend;
  trend.coefficients = Vec::Constant(1, 44.0);
  const auto full = simulate_gp(GridGeometry::desk_scale(), spec, trend, seed);
  GapCase c;
  c.train = full;
  Rng rng(seed + 11);
  std::vector<double> truth;
  for (std::size_t i = 0; i < full.geometry.cell_count(); ++i)
    if (rng.uniform() < missing) {
      c.train.clear(i);
      c.tests.push_back(full.geometry.center(i));
      truth.push_back(full.values[i]);
    }
  c.truth = Eigen::Map<const Vec>(truth.data(), static_cast<Eigen::Index>(truth.size()));
  return c;
}

double rmse(const Vec& a, const Vec& b) { return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size())); }

}  // namespace

TEST(Embed, ExpandedDims) {
  EXPECT_EQ(embed(GridGeometry::case_study(), 1.2), (LatticeDims{360, 600}));
  EXPECT_EQ(embed(GridGeometry::case_study(), 1.0), (LatticeDims{300, 500}));
  EXPECT_EQ(embed(GridGeometry{100, 60, {}}, 1.2), (LatticeDims{120, 72}));
  EXPECT_EQ(embed(GridGeometry::desk_scale(), 1.2), (LatticeDims{72, 120}));
  EXPECT_THROW(embed(GridGeometry::desk_scale(), 0.9), ConfigError);
}

TEST(SpectrumToCov, ConstantSpectrumIsWhiteNoise) {
  const LatticeDims d{6, 10};
  const auto r = spectrum_to_cov(model_with(d, std::vector<double>(d.size(), 2.5)));
  EXPECT_NEAR(r[0], 2.5, 1e-12);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_NEAR(r[i], 0.0, 1e-12);
}

TEST(SpectrumToCov, MatchesDirectSummation) {
  const LatticeDims d{8, 6};
  const auto m = model_with(d, smooth_spectrum(d));
  const auto r = spectrum_to_cov(m);
  const double mean_f = std::accumulate(m.f.begin(), m.f.end(), 0.0) / static_cast<double>(d.size());
  EXPECT_NEAR(r[0], mean_f, 1e-12);
  for (long a = 0; a < 8; ++a)
    for (long b = 0; b < 6; ++b) EXPECT_NEAR(r[static_cast<std::size_t>(a * 6 + b)], direct_cov(m, a, b), 1e-12);
}

TEST(SpectrumToCov, SingleFrequencyIsCosine) {
  const LatticeDims d{12, 10};
  std::vector<double> f(d.size(), 0.0);
  f[2 * 10 + 3] = 5.0;
  f[10 * 10 + 7] = 5.0;  // conjugate partner of (2, 3)
  const auto r = spectrum_to_cov(model_with(d, f));
  for (long a = 0; a < 12; ++a)
    for (long b = 0; b < 10; ++b) {
      const double expect = 10.0 / 120.0 * std::cos(2.0 * std::numbers::pi * (2.0 * a / 12.0 + 3.0 * b / 10.0));
      EXPECT_NEAR(r[static_cast<std::size_t>(a * 10 + b)], expect, 1e-12);
    }
}

TEST(SpectrumToCov, Periodic) {
  const LatticeDims d{9, 7};
  const auto r = spectrum_to_cov(model_with(d, smooth_spectrum(d)));
  for (long a = -9; a < 9; ++a)
    for (long b = -7; b < 7; ++b) {
      EXPECT_EQ(cov_at(r, d, a, b), cov_at(r, d, a + 9, b));
      EXPECT_EQ(cov_at(r, d, a, b), cov_at(r, d, a, b - 7));
      EXPECT_NEAR(cov_at(r, d, a, b), cov_at(r, d, -a, -b), 1e-12);
    }
}

TEST(CirculantMultiply, MatchesDenseProduct) {
  const LatticeDims d{6, 8};
  const auto m = model_with(d, smooth_spectrum(d));
  Rng rng(3);
  std::vector<double> x(d.size());
  for (auto& v : x) v = rng.normal();
  const auto y = circulant_multiply(m, x);
  const Vec expect = dense_cov(m) * Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], expect(static_cast<Eigen::Index>(i)), 1e-10);
}

TEST(ConditionalImpute, NoMissingCellsUnchanged) {
  const LatticeDims d{5, 7};
  const auto m = model_with(d, smooth_spectrum(d));
  EmbeddedField f{d, std::vector<double>(d.size()), std::vector<std::uint8_t>(d.size(), 1)};
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = 0.1 * static_cast<double>(i);
  const auto out = conditional_impute(m, f, 9);
  EXPECT_EQ(out.values, f.values);
}

TEST(ConditionalImpute, ObservedCellsAreFixed) {
  const LatticeDims d{20, 24};
  const auto m = model_with(d, smooth_spectrum(d));
  EmbeddedField f{d, std::vector<double>(d.size(), 0.0), std::vector<std::uint8_t>(d.size(), 0)};
  Rng rng(5);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (rng.uniform() < 0.6) f.observed[i] = 1, f.values[i] = rng.normal();
  const auto out = conditional_impute(m, f, 17);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (f.observed[i]) EXPECT_EQ(out.values[i], f.values[i]);
}

TEST(ConditionalImpute, WhiteNoiseFillsIndependentDraws) {
  const LatticeDims d{30, 40};
  const auto m = model_with(d, std::vector<double>(d.size(), 4.0));
  EmbeddedField f{d, std::vector<double>(d.size(), 0.0), std::vector<std::uint8_t>(d.size(), 0)};
  for (std::size_t i = 0; i < d.size(); i += 2) f.observed[i] = 1, f.values[i] = 100.0;
  double s = 0.0, ss = 0.0, n = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto out = conditional_impute(m, f, seed);
    for (std::size_t i = 1; i < d.size(); i += 2) s += out.values[i], ss += out.values[i] * out.values[i], n += 1.0;
  }
  const double mean = s / n, var = ss / n - mean * mean;
  // n = 12000 draws: SE(mean) = 0.018, SE(var) = 0.052.
  EXPECT_NEAR(mean, 0.0, 4 * 0.018);
  EXPECT_NEAR(var, 4.0, 4 * 0.052);
}

TEST(ConditionalImpute, MatchesDenseConditionalGaussian) {
  const LatticeDims d{16, 16};
  const auto m = model_with(d, smooth_spectrum(d, 0.3));
  const Mat r = dense_cov(m);
  Rng rng(21);
  EmbeddedField f{d, std::vector<double>(d.size(), 0.0), std::vector<std::uint8_t>(d.size(), 1)};
  {
    const Mat l = r.llt().matrixL();
    Vec z(static_cast<Eigen::Index>(d.size()));
    for (auto& v : z) v = rng.normal();
    const Vec y = l * z;
    for (std::size_t i = 0; i < d.size(); ++i) f.values[i] = y(static_cast<Eigen::Index>(i));
  }
  std::vector<std::size_t> obs, mis;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (rng.uniform() < 0.3) f.observed[i] = 0, f.values[i] = 0.0;
    (f.observed[i] ? obs : mis).push_back(i);
  }
  ASSERT_GT(mis.size(), 50u);
  const auto no = static_cast<Eigen::Index>(obs.size()), nm = static_cast<Eigen::Index>(mis.size());
  Mat roo(no, no), rmo(nm, no);
  Vec u(no);
  for (Eigen::Index a = 0; a < no; ++a) {
    u(a) = f.values[obs[static_cast<std::size_t>(a)]];
    for (Eigen::Index b = 0; b < no; ++b) roo(a, b) = r(static_cast<Eigen::Index>(obs[static_cast<std::size_t>(a)]), static_cast<Eigen::Index>(obs[static_cast<std::size_t>(b)]));
  }
  for (Eigen::Index a = 0; a < nm; ++a)
    for (Eigen::Index b = 0; b < no; ++b) rmo(a, b) = r(static_cast<Eigen::Index>(mis[static_cast<std::size_t>(a)]), static_cast<Eigen::Index>(obs[static_cast<std::size_t>(b)]));
  const Eigen::LLT<Mat> llt(roo);
  const Vec cond_mean = rmo * llt.solve(u);
  const Mat w = llt.matrixL().solve(rmo.transpose());
  Vec cond_var(nm);
  for (Eigen::Index a = 0; a < nm; ++a)
    cond_var(a) = r(static_cast<Eigen::Index>(mis[static_cast<std::size_t>(a)]), static_cast<Eigen::Index>(mis[static_cast<std::size_t>(a)])) - w.col(a).squaredNorm();

  const int seeds = 500;
  Vec sum = Vec::Zero(nm), sum2 = Vec::Zero(nm);
  for (int s = 0; s < seeds; ++s) {
    const auto out = conditional_impute(m, f, static_cast<std::uint64_t>(1000 + s));
    for (Eigen::Index a = 0; a < nm; ++a) {
      const double v = out.values[mis[static_cast<std::size_t>(a)]];
      sum(a) += v, sum2(a) += v * v;
    }
  }
  const Vec mc_mean = sum / seeds;
  const Vec z = ((mc_mean - cond_mean).array() / (cond_var.array() / seeds).sqrt()).matrix();
  // Per-cell standardized errors are N(0,1) under the oracle. At most 1% may
  // exceed 3 (expected 0.27%); their mean square must be near 1.
  const double beyond3 = static_cast<double>((z.array().abs() > 3.0).count()) / static_cast<double>(nm);
  EXPECT_LE(beyond3, 0.01);
  const double ms = z.squaredNorm() / static_cast<double>(nm);
  EXPECT_GT(ms, 0.7);
  EXPECT_LT(ms, 1.3);
  const Vec mc_var = (sum2 / seeds).array() - mc_mean.array().square();
  for (Eigen::Index a = 0; a < nm; ++a) EXPECT_NEAR(mc_var(a) / cond_var(a), 1.0, 0.3);
}

TEST(ConditionalImpute, ReproducibleFromSeed) {
  const LatticeDims d{12, 14};
  const auto m = model_with(d, smooth_spectrum(d));
  EmbeddedField f{d, std::vector<double>(d.size(), 1.0), std::vector<std::uint8_t>(d.size(), 1)};
  for (std::size_t i = 0; i < d.size(); i += 3) f.observed[i] = 0;
  EXPECT_EQ(conditional_impute(m, f, 4).values, conditional_impute(m, f, 4).values);
  EXPECT_NE(conditional_impute(m, f, 4).values, conditional_impute(m, f, 5).values);
}

TEST(ConditionalImpute, SolverFailureWhenCapped) {
  const LatticeDims d{16, 20};
  const auto m = model_with(d, smooth_spectrum(d, 0.01));
  EmbeddedField f{d, std::vector<double>(d.size(), 0.0), std::vector<std::uint8_t>(d.size(), 1)};
  Rng rng(2);
  for (std::size_t i = 0; i < d.size(); ++i) {
    f.values[i] = rng.normal();
    if (rng.uniform() < 0.4) f.observed[i] = 0;
  }
  CgOptions cg;
  cg.max_iterations = 1;
  cg.tolerance = 1e-14;
  EXPECT_THROW(conditional_impute(m, f, 1, cg), SolverFailure);
  std::fill(f.observed.begin(), f.observed.end(), 0);
  EXPECT_THROW(conditional_impute(m, f, 1), InsufficientPoints);
}

TEST(ConditionalImpute, ConvergesQuicklyAtDeskScale) {
  const auto c = gap_case({9.0, 0.5, 0.25}, 0.1, 20160804);
  SpectralOptions opt;
  opt.iterations = 1;
  const auto fit = pe_fit(c.train, opt);
  CgReport rep;
  conditional_impute(fit.model, fit.field, 3, opt.cg, &rep);
  EXPECT_LT(rep.relative_residual, 1e-8);
  EXPECT_LT(rep.iterations, 1000);
}

TEST(Smoothing, KernelSumsToOneAndIsSymmetric) {
  for (int b : {0, 1, 3, 5}) {
    const auto k = epanechnikov_kernel(b);
    ASSERT_EQ(k.size(), static_cast<std::size_t>((2 * b + 1) * (2 * b + 1)));
    EXPECT_NEAR(std::accumulate(k.begin(), k.end(), 0.0), 1.0, 1e-15);
    for (std::size_t i = 0; i < k.size(); ++i) {
      EXPECT_GT(k[i], 0.0);
      EXPECT_EQ(k[i], k[k.size() - 1 - i]);
    }
  }
  EXPECT_THROW(epanechnikov_kernel(-1), ConfigError);
}

TEST(UpdateSpectrum, IdentityKernelIsRawPeriodogram) {
  const LatticeDims d{7, 9};
  auto m = model_with(d, std::vector<double>(d.size(), 1.0));
  m.bandwidth = 0;
  Rng rng(8);
  EmbeddedField f{d, std::vector<double>(d.size()), std::vector<std::uint8_t>(d.size(), 1)};
  ComplexGrid g(d.rows, d.cols);
  for (std::size_t i = 0; i < d.size(); ++i) g.data[i] = f.values[i] = rng.normal();
  const auto j = oracle::direct_dft2(g, false);
  const auto next = update_spectrum(m, f);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(next.f[i], std::norm(j.data[i]), 1e-12);
}

TEST(UpdateSpectrum, FlatFieldConcentratesAtZero) {
  const LatticeDims d{10, 12};
  auto m = model_with(d, std::vector<double>(d.size(), 1.0));
  m.bandwidth = 0;
  const EmbeddedField f{d, std::vector<double>(d.size(), 2.0), std::vector<std::uint8_t>(d.size(), 1)};
  const auto next = update_spectrum(m, f);
  EXPECT_NEAR(next.f[0], 4.0 * static_cast<double>(d.size()), 1e-9);
  for (std::size_t i = 1; i < d.size(); ++i) EXPECT_NEAR(next.f[i], 0.0, 1e-12);
}

TEST(UpdateSpectrum, SmoothingPreservesMeanSignAndSymmetry) {
  const LatticeDims d{24, 30};
  const auto m = model_with(d, std::vector<double>(d.size(), 1.0));
  Rng rng(12);
  EmbeddedField f{d, std::vector<double>(d.size()), std::vector<std::uint8_t>(d.size(), 1)};
  for (auto& v : f.values) v = rng.normal() + 0.3;
  const auto raw = periodogram(d, f.values);
  const auto next = update_spectrum(m, f);
  const double mean_raw = std::accumulate(raw.begin(), raw.end(), 0.0) / static_cast<double>(d.size());
  const double mean_new = std::accumulate(next.f.begin(), next.f.end(), 0.0) / static_cast<double>(d.size());
  EXPECT_NEAR(mean_new, mean_raw, 1e-10);
  for (double v : next.f) EXPECT_GE(v, 0.0);
  EXPECT_TRUE(conjugate_symmetric(d, next.f, 1e-10));
}

TEST(PeFit, ParsevalFullyObservedNoExpansion) {
  const auto c = gap_case({9.0, 0.5, 0.25}, 0.0, 31);
  SpectralOptions opt;
  opt.tau = 1.0;
  const auto fit = pe_fit(c.train, opt);
  const auto obs = observations(c.train);
  const double mean = obs.y.mean();
  const double var = (obs.y.array() - mean).square().mean();
  const double mean_f = std::accumulate(fit.model.f.begin(), fit.model.f.end(), 0.0) / static_cast<double>(fit.model.f.size());
  EXPECT_NEAR(mean_f, var, 1e-6 * var);
  EXPECT_NEAR(spectrum_to_cov(fit.model)[0], var, 1e-6 * var);
}

TEST(PeFit, ParsevalAfterTwentyIterations) {
  const auto c = gap_case({9.0, 0.5, 0.25}, 0.0, 32);
  SpectralOptions opt;
  opt.tolerance = 0.0;
  const auto fit = pe_fit(c.train, opt);
  EXPECT_EQ(fit.iterations, 20);
  double ms = 0.0;
  for (double v : fit.completed.values) ms += v * v;
  ms /= static_cast<double>(fit.completed.values.size());
  const double mean_f = std::accumulate(fit.model.f.begin(), fit.model.f.end(), 0.0) / static_cast<double>(fit.model.f.size());
  EXPECT_NEAR(mean_f, ms, 1e-6 * ms);
}

TEST(PeFit, SpectrumInvariantsAndFixedObservations) {
  const auto c = gap_case({9.0, 0.5, 0.25}, 0.1, 33);
  SpectralOptions opt;
  opt.iterations = 5;
  const auto fit = pe_fit(c.train, opt);
  EXPECT_EQ(fit.model.expanded, (LatticeDims{72, 120}));
  for (double v : fit.model.f) EXPECT_GE(v, 0.0);
  EXPECT_TRUE(conjugate_symmetric(fit.model.expanded, fit.model.f, 1e-9));
  for (std::size_t i = 0; i < fit.field.values.size(); ++i)
    if (fit.field.observed[i]) EXPECT_EQ(fit.completed.values[i], fit.field.values[i]);
  EXPECT_THROW(pe_fit(c.train, SpectralOptions{.iterations = 0}), ConfigError);
}

TEST(PeFitPredict, RmseWithinFifteenPercentOfExactKriging) {
  const CovarianceSpec truth{9.0, 0.5, 0.25};
  const auto c = gap_case(truth, 0.1, 20160804);
  ASSERT_GT(c.tests.size(), 500u);
  const auto pe = pe_fit_predict(c.train, c.tests);
  const auto ex = krige(c.train, c.tests, truth);
  const double r_pe = rmse(pe.mean, c.truth), r_ex = rmse(ex.mean, c.truth);
  EXPECT_LE(r_pe, 1.15 * r_ex) << "pe " << r_pe << " exact " << r_ex;
  EXPECT_EQ(pe.method, "periodic-embedding");
}

TEST(PeFitPredict, EnsembleIntervalCoverage) {
  const auto c = gap_case({9.0, 0.5, 0.25}, 0.2, 77);
  ASSERT_GE(c.tests.size(), 1000u);
  const auto p = pe_fit_predict(c.train, c.tests);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    ASSERT_GT(p.se(i), 0.0);
    ASSERT_LE(p.lower(i), p.upper(i));
  }
  const double cvg = scoring::coverage(scoring::as_span(p.lower), scoring::as_span(p.upper), scoring::as_span(c.truth));
  EXPECT_GE(cvg, 0.90);
  EXPECT_LE(cvg, 0.98);
}

TEST(PeFitPredict, DeterministicAndWorkerInvariant) {
  const auto c = gap_case({9.0, 0.5, 0.25}, 0.05, 91);
  SpectralOptions opt;
  opt.iterations = 3;
  opt.ensemble = 10;
  opt.seed = 7;
  const auto a = pe_fit_predict(c.train, c.tests, opt, 1);
  const auto b = pe_fit_predict(c.train, c.tests, opt, 3);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.se, b.se);
  EXPECT_EQ(a.lower, b.lower);
  EXPECT_EQ(a.upper, b.upper);
}

TEST(PeFitPredict, TrendIsRestored) {
  const auto c = gap_case({9.0, 0.5, 0.25}, 0.05, 92);
  SpectralOptions opt;
  opt.iterations = 3;
  opt.ensemble = 20;
  const auto p = pe_fit_predict(c.train, c.tests, opt);
  EXPECT_NEAR(p.mean.mean(), c.truth.mean(), 1.5);
  auto shifted = c.train;
  for (std::size_t i = 0; i < shifted.values.size(); ++i)
    if (shifted.observed[i]) shifted.values[i] += 100.0;
  const auto q = pe_fit_predict(shifted, c.tests, opt);
  for (Eigen::Index i = 0; i < p.size(); ++i) EXPECT_NEAR(q.mean(i), p.mean(i) + 100.0, 1e-6);  // CG residual tolerance 1e-8
}

TEST(PeFitPredict, RejectsTestsOffGrid) {
  const auto c = gap_case({9.0, 0.5, 0.25}, 0.05, 93);
  SpectralOptions opt;
  opt.iterations = 1;
  opt.ensemble = 2;
  EXPECT_THROW(pe_fit_predict(c.train, {{0.0, 0.0}}, opt), GeometryMismatch);
}
