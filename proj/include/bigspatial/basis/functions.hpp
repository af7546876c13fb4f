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
#include <cstddef>
#include <vector>

#include "bigspatial/dataset.hpp"
#include "bigspatial/geometry.hpp"
#include "bigspatial/numerics/sparse.hpp"

namespace bigspatial::basis {

/// (1 - (d/a)^2)^2 on [0, a], zero outside.
inline double eval_bisquare(double d, double a) {
  if (d >= a) return 0.0;
  const double t = 1.0 - (d / a) * (d / a);
  return t * t;
}

/// Wendland polynomial (1/3)(1 - d)^6 (35 d^2 + 18 d + 3) on [0, 1], zero
/// outside; equals 1 at the origin.
inline double eval_wendland(double d) {
  if (d >= 1.0) return 0.0;
  const double t = 1.0 - d;
  const double t3 = t * t * t;
  return t3 * t3 * (35.0 * d * d + 18.0 * d + 3.0) / 3.0;
}

enum class Family { bisquare, wendland };

/// One resolution: a regular nx x ny grid of centers. Center k sits at
/// column k % nx and row k / nx.
struct Resolution {
  double lon0 = 0.0, lat0 = 0.0;
  std::size_t nx = 0, ny = 0;
  double spacing = 1.0;
  double support = 1.0;  // radius beyond which every basis function vanishes

  std::size_t size() const { return nx * ny; }
  Location center(std::size_t k) const {
    return {lon0 + static_cast<double>(k % nx) * spacing, lat0 + static_cast<double>(k / nx) * spacing};
  }
  std::vector<Location> centers() const {
    std::vector<Location> c(size());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = center(k);
    return c;
  }
};

struct BasisSystem {
  Family family = Family::wendland;
  std::vector<Resolution> levels;

  std::size_t resolutions() const { return levels.size(); }
  std::size_t size() const {
    std::size_t k = 0;
    for (const auto& l : levels) k += l.size();
    return k;
  }
  std::size_t offset(std::size_t r) const {
    std::size_t k = 0;
    for (std::size_t i = 0; i < r; ++i) k += levels[i].size();
    return k;
  }

  double value(const Resolution& l, double d) const {
    return family == Family::bisquare ? eval_bisquare(d, l.support) : eval_wendland(d / l.support);
  }

  /// Evaluation matrix of one resolution, rows = locations.
  SparseMatrix evaluate(const std::vector<Location>& locs, std::size_t r) const {
    const auto& l = levels[r];
    std::vector<Triplet> trip;
    trip.reserve(locs.size() * 16);
    const auto clamp_index = [](double v, std::size_t n) {
      return static_cast<long>(std::clamp(v, -1.0, static_cast<double>(n)));
    };
    for (std::size_t i = 0; i < locs.size(); ++i) {
      const auto& s = locs[i];
      const long x_lo = std::max(0L, clamp_index(std::ceil((s.lon - l.support - l.lon0) / l.spacing), l.nx));
      const long x_hi = std::min(static_cast<long>(l.nx) - 1, clamp_index(std::floor((s.lon + l.support - l.lon0) / l.spacing), l.nx));
      const long y_lo = std::max(0L, clamp_index(std::ceil((s.lat - l.support - l.lat0) / l.spacing), l.ny));
      const long y_hi = std::min(static_cast<long>(l.ny) - 1, clamp_index(std::floor((s.lat + l.support - l.lat0) / l.spacing), l.ny));
      for (long iy = y_lo; iy <= y_hi; ++iy)
        for (long ix = x_lo; ix <= x_hi; ++ix) {
          const std::size_t k = static_cast<std::size_t>(iy) * l.nx + static_cast<std::size_t>(ix);
          const double v = value(l, distance(s, l.center(k)));
          if (v > 0.0) trip.emplace_back(static_cast<int>(i), static_cast<int>(k), v);
        }
    }
    SparseMatrix h(static_cast<Eigen::Index>(locs.size()), static_cast<Eigen::Index>(l.size()));
    h.setFromTriplets(trip.begin(), trip.end());
    return h;
  }

  /// All resolutions side by side: H_ij = h_j(s_i).
  SparseMatrix evaluate(const std::vector<Location>& locs) const {
    std::vector<Triplet> trip;
    for (std::size_t r = 0; r < levels.size(); ++r) {
      const SparseMatrix h = evaluate(locs, r);
      const int off = static_cast<int>(offset(r));
      for (int j = 0; j < h.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(h, j); it; ++it) trip.emplace_back(static_cast<int>(it.row()), off + j, it.value());
    }
    SparseMatrix h(static_cast<Eigen::Index>(locs.size()), static_cast<Eigen::Index>(size()));
    h.setFromTriplets(trip.begin(), trip.end());
    return h;
  }
};

/// Regular center grids over `extent` padded by `margin` degrees on every
/// side. The coarsest grid uses `coarsest_spacing`; each further resolution
/// halves the spacing and doubles the count along both axes. Support radius
/// is `support_factor` times the spacing.
inline BasisSystem build_basis(const BoundingBox& extent, std::size_t resolutions, Family family,
                               double coarsest_spacing, double margin, double support_factor) {
  if (resolutions < 1) throw ConfigError("build_basis: need at least one resolution");
  if (!(coarsest_spacing > 0.0) || !(support_factor > 0.0) || margin < 0.0)
    throw ConfigError("build_basis: spacing and support must be positive");
  const double w = extent.width() + 2.0 * margin;
  const double h = extent.height() + 2.0 * margin;
  const auto nx1 = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(w / coarsest_spacing - 1e-9)));
  const auto ny1 = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(h / coarsest_spacing - 1e-9)));
  const double mid_lon = 0.5 * (extent.lon_min + extent.lon_max);
  const double mid_lat = 0.5 * (extent.lat_min + extent.lat_max);
  BasisSystem b;
  b.family = family;
  for (std::size_t r = 0; r < resolutions; ++r) {
    Resolution l;
    const auto f = std::size_t{1} << r;
    l.nx = nx1 * f;
    l.ny = ny1 * f;
    l.spacing = coarsest_spacing / static_cast<double>(f);
    l.support = support_factor * l.spacing;
    l.lon0 = mid_lon - 0.5 * static_cast<double>(l.nx - 1) * l.spacing;
    l.lat0 = mid_lat - 0.5 * static_cast<double>(l.ny - 1) * l.spacing;
    b.levels.push_back(l);
  }
  return b;
}

inline BasisSystem build_basis(const GridGeometry& g, std::size_t resolutions, Family family, double coarsest_spacing,
                               double margin, double support_factor) {
  return build_basis(g.extent, resolutions, family, coarsest_spacing, margin, support_factor);
}

}  // namespace bigspatial::basis
