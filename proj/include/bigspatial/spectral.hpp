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
#include <vector>

#include "bigspatial/dataset.hpp"
#include "bigspatial/errors.hpp"
#include "bigspatial/numerics/dft.hpp"
#include "bigspatial/numerics/parallel.hpp"
#include "bigspatial/numerics/random.hpp"

namespace bigspatial::spectral {

struct LatticeDims {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  friend bool operator==(const LatticeDims&, const LatticeDims&) = default;
};

/// Expanded lattice floor(tau * N) per axis.
inline LatticeDims embed(const GridGeometry& g, double tau) {
  if (!(tau >= 1.0)) throw ConfigError("embed: expansion factor must be at least 1");
  // The small offset keeps exact products such as 1.2 * 300 from flooring down.
  auto grow = [&](std::size_t n) { return static_cast<std::size_t>(std::floor(tau * static_cast<double>(n) * (1.0 + 1e-12))); };
  return {grow(g.n_rows), grow(g.n_cols)};
}

/// Spectrum on the Fourier grid of the expanded lattice, stored row-major
/// with frequency index (k1, k2) at k1 * cols + k2.
struct SpectralModel {
  LatticeDims original;
  LatticeDims expanded;
  double tau = 1.2;
  std::vector<double> f;
  int bandwidth = 3;
};

/// Values on the expanded lattice; the original grid occupies the top-left
/// block. Cells flagged observed are never modified by imputation.
struct EmbeddedField {
  LatticeDims dims;
  std::vector<double> values;
  std::vector<std::uint8_t> observed;
};

namespace detail {

inline ComplexGrid to_complex(const LatticeDims& d, const std::vector<double>& v) {
  ComplexGrid g(d.rows, d.cols);
  for (std::size_t i = 0; i < v.size(); ++i) g.data[i] = v[i];
  return g;
}

/// Unitary transform, multiply by `weights`, unitary inverse; real part.
inline std::vector<double> filter(const LatticeDims& d, const std::vector<double>& weights, const std::vector<double>& x) {
  auto spec = numerics::dft2(to_complex(d, x), false);
  for (std::size_t i = 0; i < spec.size(); ++i) spec.data[i] *= weights[i];
  const auto back = numerics::dft2(spec, true);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = back.data[i].real();
  return out;
}

}  // namespace detail

/// R(h) = (m1 m2)^{-1} sum_w f(w) exp(i w'h) for every offset h on the lattice.
inline std::vector<double> spectrum_to_cov(const SpectralModel& model) {
  const auto& d = model.expanded;
  const auto back = numerics::dft2(detail::to_complex(d, model.f), true);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d.size()));
  std::vector<double> r(d.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = back.data[i].real() * scale;
  return r;
}

/// Covariance at offset (dr, dc), reduced modulo the lattice.
inline double cov_at(const std::vector<double>& r, const LatticeDims& d, long dr, long dc) {
  const auto m1 = static_cast<long>(d.rows), m2 = static_cast<long>(d.cols);
  const long a = ((dr % m1) + m1) % m1, b = ((dc % m2) + m2) % m2;
  return r[static_cast<std::size_t>(a * m2 + b)];
}

/// Product of the periodic covariance matrix with a lattice vector.
inline std::vector<double> circulant_multiply(const SpectralModel& model, const std::vector<double>& x) {
  return detail::filter(model.expanded, model.f, x);
}

/// Unconditional draw with covariance R: the circulant square root applied
/// to white noise.
inline std::vector<double> periodic_draw(const SpectralModel& model, Rng& rng) {
  std::vector<double> w(model.expanded.size());
  for (auto& v : w) v = rng.normal();
  std::vector<double> root(model.f.size());
  for (std::size_t i = 0; i < root.size(); ++i) root[i] = std::sqrt(std::max(model.f[i], 0.0));
  return detail::filter(model.expanded, root, w);
}

struct CgOptions {
  double tolerance = 1e-8;  // relative residual
  int max_iterations = 1000;
};

struct CgReport {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Solves R_OO x = b over the observed cells by conjugate gradients. The
/// preconditioner applies the full-lattice inverse circulant restricted to O.
inline std::vector<double> solve_observed(const SpectralModel& model, const std::vector<std::size_t>& obs,
                                          const std::vector<double>& b, const CgOptions& opt, CgReport* report = nullptr) {
  const std::size_t n = obs.size();
  const std::size_t full = model.expanded.size();
  double fmax = 0.0;
  for (double v : model.f) fmax = std::max(fmax, v);
  std::vector<double> inv(model.f.size());
  for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / std::max(model.f[i], 1e-12 * fmax);

  auto apply = [&](const std::vector<double>& weights, const std::vector<double>& v) {
    std::vector<double> ext(full, 0.0);
    for (std::size_t k = 0; k < n; ++k) ext[obs[k]] = v[k];
    const auto y = detail::filter(model.expanded, weights, ext);
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = y[obs[k]];
    return out;
  };
  auto dot = [](const std::vector<double>& a, const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * c[i];
    return s;
  };

  std::vector<double> x(n, 0.0), r = b;
  const double bnorm = std::sqrt(dot(b, b));
  if (report) *report = {0, 0.0};
  if (bnorm == 0.0) return x;
  std::vector<double> z = apply(inv, r), p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const auto ap = apply(model.f, p);
    const double alpha = rz / dot(p, ap);
    for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i], r[i] -= alpha * ap[i];
    const double rel = std::sqrt(dot(r, r)) / bnorm;
    if (report) *report = {it, rel};
    if (rel < opt.tolerance) return x;
    z = apply(inv, r);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolverFailure("periodic embedding: conjugate gradients did not reach the tolerance");
}

/// Conditional simulation of the unobserved cells given the observed ones:
/// Z + R_.O R_OO^{-1} (U - Z_O) with Z an unconditional periodic draw.
inline EmbeddedField conditional_impute(const SpectralModel& model, const EmbeddedField& field, std::uint64_t seed,
                                        const CgOptions& opt = {}, CgReport* report = nullptr) {
  if (!(field.dims == model.expanded)) throw GeometryMismatch("conditional_impute: field and spectrum dims differ");
  std::vector<std::size_t> obs;
  for (std::size_t i = 0; i < field.observed.size(); ++i)
    if (field.observed[i]) obs.push_back(i);
  if (obs.empty()) throw InsufficientPoints("conditional_impute: no observed cells");
  EmbeddedField out = field;
  if (obs.size() == field.values.size()) return out;
  Rng rng(seed);
  const auto z = periodic_draw(model, rng);
  std::vector<double> b(obs.size());
  for (std::size_t k = 0; k < obs.size(); ++k) b[k] = field.values[obs[k]] - z[obs[k]];
  const auto x = solve_observed(model, obs, b, opt, report);
  std::vector<double> ext(field.values.size(), 0.0);
  for (std::size_t k = 0; k < obs.size(); ++k) ext[obs[k]] = x[k];
  const auto krig = circulant_multiply(model, ext);
  for (std::size_t i = 0; i < out.values.size(); ++i)
    if (!out.observed[i]) out.values[i] = z[i] + krig[i];
  return out;
}

/// |J(w)|^2 with the unitary DFT.
inline std::vector<double> periodogram(const LatticeDims& d, const std::vector<double>& values) {
  const auto j = numerics::dft2(detail::to_complex(d, values), false);
  std::vector<double> p(j.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(j.data[i]);
  return p;
}

/// Product Epanechnikov weights on offsets -b..b per axis, normalized to sum
/// to 1; bandwidth 0 is a point mass.
inline std::vector<double> epanechnikov_kernel(int bandwidth) {
  if (bandwidth < 0) throw ConfigError("epanechnikov_kernel: negative bandwidth");
  const int w = 2 * bandwidth + 1;
  std::vector<double> k(static_cast<std::size_t>(w * w));
  double total = 0.0;
  for (int i = -bandwidth; i <= bandwidth; ++i)
    for (int j = -bandwidth; j <= bandwidth; ++j) {
      const double u = static_cast<double>(i) / (bandwidth + 1), v = static_cast<double>(j) / (bandwidth + 1);
      const double val = (1.0 - u * u) * (1.0 - v * v);
      k[static_cast<std::size_t>((i + bandwidth) * w + (j + bandwidth))] = val;
      total += val;
    }
  for (auto& v : k) v /= total;
  return k;
}

/// Circular convolution of a lattice spectrum with the kernel.
inline std::vector<double> smooth(const LatticeDims& d, const std::vector<double>& p, int bandwidth) {
  const auto k = epanechnikov_kernel(bandwidth);
  const int w = 2 * bandwidth + 1;
  const auto m1 = static_cast<long>(d.rows), m2 = static_cast<long>(d.cols);
  std::vector<double> out(p.size(), 0.0);
  for (long r = 0; r < m1; ++r)
    for (long c = 0; c < m2; ++c) {
      double s = 0.0;
      for (int i = -bandwidth; i <= bandwidth; ++i) {
        const long rr = (((r - i) % m1) + m1) % m1;
        for (int j = -bandwidth; j <= bandwidth; ++j) {
          const long cc = (((c - j) % m2) + m2) % m2;
          s += k[static_cast<std::size_t>((i + bandwidth) * w + (j + bandwidth))] * p[static_cast<std::size_t>(rr * m2 + cc)];
        }
      }
      out[static_cast<std::size_t>(r * m2 + c)] = s;
    }
  return out;
}

/// Smoothed periodogram of a completed field.
inline SpectralModel update_spectrum(const SpectralModel& model, const EmbeddedField& completed) {
  SpectralModel next = model;
  next.f = smooth(model.expanded, periodogram(model.expanded, completed.values), model.bandwidth);
  return next;
}

struct SpectralOptions {
  double tau = 1.2;
  int iterations = 20;
  double tolerance = 1e-4;  // early stop on max relative spectrum change
  int bandwidth = 3;
  std::size_t ensemble = 100;
  std::uint64_t seed = 1;
  CgOptions cg;
};

struct SpectralFit {
  SpectralModel model;
  EmbeddedField field;      // residuals, unobserved cells zero
  EmbeddedField completed;  // last imputation
  Vec beta;
  TrendKind trend = TrendKind::constant;
  GridGeometry geometry;
  int iterations = 0;
  double last_change = 0.0;
};

/// Observed residuals after an OLS trend fit, placed on the expanded lattice.
inline EmbeddedField embed_residuals(const SpatialDataset& d, const LatticeDims& m, Vec& beta) {
  const auto obs = observations(d);
  if (obs.size() == 0) throw InsufficientPoints("periodic embedding: no observations");
  beta = obs.x.colPivHouseholderQr().solve(obs.y);
  EmbeddedField f;
  f.dims = m;
  f.values.assign(m.size(), 0.0);
  f.observed.assign(m.size(), 0);
  std::size_t k = 0;
  for (std::size_t c = 0; c < d.geometry.cell_count(); ++c) {
    if (!d.observed[c]) continue;
    const std::size_t cell = d.geometry.row(c) * m.cols + d.geometry.col(c);
    f.values[cell] = obs.y(static_cast<Eigen::Index>(k)) - obs.x.row(static_cast<Eigen::Index>(k)).dot(beta);
    f.observed[cell] = 1;
    ++k;
  }
  return f;
}

/// Impute/update iterations from the periodogram of the zero-filled
/// residuals, rescaled by the observed fraction.
inline SpectralFit pe_fit(const SpatialDataset& d, const SpectralOptions& opt = {}) {
  if (opt.iterations < 1) throw ConfigError("periodic embedding: need at least one iteration");
  SpectralFit fit;
  fit.geometry = d.geometry;
  fit.trend = d.trend.kind;
  fit.model.original = {d.geometry.n_rows, d.geometry.n_cols};
  fit.model.expanded = embed(d.geometry, opt.tau);
  fit.model.tau = opt.tau;
  fit.model.bandwidth = opt.bandwidth;
  fit.field = embed_residuals(d, fit.model.expanded, fit.beta);
  double n_obs = 0.0;
  for (auto o : fit.field.observed) n_obs += o;
  auto p0 = smooth(fit.model.expanded, periodogram(fit.model.expanded, fit.field.values), opt.bandwidth);
  for (auto& v : p0) v *= static_cast<double>(fit.model.expanded.size()) / n_obs;
  fit.model.f = std::move(p0);
  fit.completed = fit.field;
  for (int it = 0; it < opt.iterations; ++it) {
    fit.completed = conditional_impute(fit.model, fit.field, opt.seed + static_cast<std::uint64_t>(it), opt.cg);
    auto next = update_spectrum(fit.model, fit.completed);
    double change = 0.0, fmax = 0.0;
    for (double v : fit.model.f) fmax = std::max(fmax, v);
    for (std::size_t i = 0; i < next.f.size(); ++i)
      change = std::max(change, std::abs(next.f[i] - fit.model.f[i]) / std::max(fit.model.f[i], 1e-12 * fmax));
    fit.model = std::move(next);
    fit.iterations = it + 1;
    fit.last_change = change;
    if (change < opt.tolerance) break;
  }
  return fit;
}

namespace detail {

/// Linear-interpolation sample quantile of sorted values.
inline double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace detail

/// Ensemble of conditional imputations at the fitted spectrum; per test cell
/// the ensemble mean, standard deviation and 2.5/97.5 percentiles, with the
/// trend restored. Observed test cells return their value.
inline PredictionResult pe_predict(const SpectralFit& fit, const std::vector<Location>& tests,
                                   const SpectralOptions& opt = {}, int workers = 1) {
  if (opt.ensemble < 2) throw ConfigError("periodic embedding: ensemble needs at least two draws");
  const auto& g = fit.geometry;
  std::vector<std::size_t> cells(tests.size());
  for (std::size_t t = 0; t < tests.size(); ++t) {
    const double c = g.lon_step() > 0 ? std::round((tests[t].lon - g.extent.lon_min) / g.lon_step()) : 0.0;
    const double r = g.lat_step() > 0 ? std::round((g.extent.lat_max - tests[t].lat) / g.lat_step()) : 0.0;
    if (c < 0 || r < 0 || c >= static_cast<double>(g.n_cols) || r >= static_cast<double>(g.n_rows))
      throw GeometryMismatch("periodic embedding: test location outside the grid");
    cells[t] = static_cast<std::size_t>(r) * fit.model.expanded.cols + static_cast<std::size_t>(c);
  }
  std::vector<std::vector<double>> draws(opt.ensemble, std::vector<double>(tests.size()));
  parallel_for(opt.ensemble, workers, [&](std::size_t e) {
    const auto f = conditional_impute(fit.model, fit.field, opt.seed + 1000003ULL + e, opt.cg);
    for (std::size_t t = 0; t < tests.size(); ++t) draws[e][t] = f.values[cells[t]];
  });
  TrendSpec trend;
  trend.kind = fit.trend;
  PredictionResult out;
  out.method = "periodic-embedding";
  out.locations = tests;
  out.resize(tests.size());
  std::vector<double> v(opt.ensemble);
  for (std::size_t t = 0; t < tests.size(); ++t) {
    const auto i = static_cast<Eigen::Index>(t);
    const double mu = trend.design_row(tests[t]).dot(fit.beta);
    double s = 0.0;
    for (std::size_t e = 0; e < opt.ensemble; ++e) s += v[e] = draws[e][t];
    const double mean = s / static_cast<double>(opt.ensemble);
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    std::sort(v.begin(), v.end());
    out.mean(i) = mu + mean;
    out.se(i) = std::sqrt(ss / static_cast<double>(opt.ensemble - 1));
    out.lower(i) = mu + detail::quantile_sorted(v, 0.025);
    out.upper(i) = mu + detail::quantile_sorted(v, 0.975);
  }
  return out;
}

inline PredictionResult pe_fit_predict(const SpatialDataset& d, const std::vector<Location>& tests,
                                       const SpectralOptions& opt = {}, int workers = 1) {
  return pe_predict(pe_fit(d, opt), tests, opt, workers);
}

}  // namespace bigspatial::spectral
