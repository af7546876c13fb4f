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
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "bigspatial/errors.hpp"
#include "bigspatial/geometry.hpp"
#include "bigspatial/numerics/dense.hpp"

namespace bigspatial {

/// Regular lon/lat grid. Cells are stored row-major; row 0 is the northern
/// edge and the row index increases southward. Cell centers span the extent
/// end to end.
struct GridGeometry {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  BoundingBox extent;

  std::size_t cell_count() const { return n_rows * n_cols; }
  std::size_t row(std::size_t cell) const { return cell / n_cols; }
  std::size_t col(std::size_t cell) const { return cell % n_cols; }
  std::size_t cell(std::size_t r, std::size_t c) const { return r * n_cols + c; }

  double lon_step() const { return n_cols > 1 ? extent.width() / static_cast<double>(n_cols - 1) : 0.0; }
  double lat_step() const { return n_rows > 1 ? extent.height() / static_cast<double>(n_rows - 1) : 0.0; }

  Location center(std::size_t r, std::size_t c) const {
    return {extent.lon_min + static_cast<double>(c) * lon_step(),
            extent.lat_max - static_cast<double>(r) * lat_step()};
  }
  Location center(std::size_t cell_index) const { return center(row(cell_index), col(cell_index)); }

  friend bool operator==(const GridGeometry& a, const GridGeometry& b) {
    return a.n_rows == b.n_rows && a.n_cols == b.n_cols && a.extent.lon_min == b.extent.lon_min &&
           a.extent.lon_max == b.extent.lon_max && a.extent.lat_min == b.extent.lat_min &&
           a.extent.lat_max == b.extent.lat_max;
  }

  /// The 300 x 500 land-surface-temperature grid of the case study.
  static GridGeometry case_study() { return {300, 500, {-95.91153, -91.28381, 34.29519, 37.06811}}; }

  /// Same extent, coarsened to 60 x 100 cells for desk-scale runs.
  static GridGeometry desk_scale() { return {60, 100, {-95.91153, -91.28381, 34.29519, 37.06811}}; }
};

enum class TrendKind { constant, linear_lon_lat };

/// Mean function X(s)'beta with X(s) = (1) or (1, lon, lat).
struct TrendSpec {
  TrendKind kind = TrendKind::constant;
  Vec coefficients;  // empty until fitted

  Eigen::Index rank() const { return kind == TrendKind::constant ? 1 : 3; }

  Eigen::RowVectorXd design_row(const Location& s) const {
    Eigen::RowVectorXd x(rank());
    x(0) = 1.0;
    if (kind == TrendKind::linear_lon_lat) {
      x(1) = s.lon;
      x(2) = s.lat;
    }
    return x;
  }

  Mat design(const std::vector<Location>& locs) const {
    Mat x(static_cast<Eigen::Index>(locs.size()), rank());
    for (std::size_t i = 0; i < locs.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = design_row(locs[i]);
    return x;
  }

  double mean(const Location& s) const { return design_row(s).dot(coefficients); }
};

inline const char* to_string(TrendKind k) { return k == TrendKind::constant ? "constant" : "linear"; }

inline TrendKind trend_kind_from_string(const std::string& s) {
  if (s == "constant") return TrendKind::constant;
  if (s == "linear" || s == "linear-lon-lat") return TrendKind::linear_lon_lat;
  throw ConfigError("unknown trend kind '" + s + "'");
}

/// Gridded observations with a missingness mask. Unobserved cells hold NaN.
struct SpatialDataset {
  GridGeometry geometry;
  std::vector<double> values;
  std::vector<std::uint8_t> observed;
  TrendSpec trend;

  static SpatialDataset empty(const GridGeometry& g, TrendKind kind = TrendKind::constant) {
    SpatialDataset d;
    d.geometry = g;
    d.values.assign(g.cell_count(), std::numeric_limits<double>::quiet_NaN());
    d.observed.assign(g.cell_count(), 0);
    d.trend.kind = kind;
    return d;
  }

  std::size_t observed_count() const {
    std::size_t n = 0;
    for (auto o : observed) n += o ? 1 : 0;
    return n;
  }

  std::vector<std::size_t> observed_cells() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < observed.size(); ++i)
      if (observed[i]) out.push_back(i);
    return out;
  }

  void set(std::size_t cell, double v) {
    values[cell] = v;
    observed[cell] = 1;
  }

  void clear(std::size_t cell) {
    values[cell] = std::numeric_limits<double>::quiet_NaN();
    observed[cell] = 0;
  }
};

/// Flat view of observed sites: locations, responses and trend design.
struct Observations {
  std::vector<Location> locations;
  Vec y;
  Mat x;
  TrendKind trend = TrendKind::constant;

  std::size_t size() const { return locations.size(); }

  Observations subset(const std::vector<std::size_t>& idx) const {
    Observations o;
    o.trend = trend;
    o.locations.reserve(idx.size());
    o.y.resize(static_cast<Eigen::Index>(idx.size()));
    o.x.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      o.locations.push_back(locations[idx[k]]);
      o.y(static_cast<Eigen::Index>(k)) = y(static_cast<Eigen::Index>(idx[k]));
      o.x.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(idx[k]));
    }
    return o;
  }
};

inline Observations make_observations(const std::vector<Location>& locs, const Vec& y, TrendKind kind) {
  if (static_cast<Eigen::Index>(locs.size()) != y.size()) throw LengthMismatch("observations: size mismatch");
  TrendSpec t;
  t.kind = kind;
  return {locs, y, t.design(locs), kind};
}

inline Observations observations(const SpatialDataset& d) {
  std::vector<Location> locs;
  std::vector<double> vals;
  for (std::size_t i = 0; i < d.observed.size(); ++i) {
    if (!d.observed[i]) continue;
    locs.push_back(d.geometry.center(i));
    vals.push_back(d.values[i]);
  }
  return make_observations(locs, Eigen::Map<const Vec>(vals.data(), static_cast<Eigen::Index>(vals.size())),
                           d.trend.kind);
}

/// Exponential covariance with a nugget:
///   C(d) = partial_sill * exp(-d / range) + nugget * 1{same point}.
struct CovarianceSpec {
  double partial_sill = 1.0;
  double range = 1.0;
  double nugget = 0.0;

  bool valid() const { return partial_sill >= 0.0 && range > 0.0 && nugget >= 0.0; }
  double total_variance() const { return partial_sill + nugget; }
};

/// 97.5% standard normal quantile.
inline constexpr double kNormal975 = 1.959963984540054;

/// Per-test-location predictive summaries.
struct PredictionResult {
  std::string method;
  std::vector<Location> locations;
  Vec mean, se, lower, upper;
  double wall_seconds = 0.0;
  int cores = 1;
  std::vector<std::string> warnings;

  std::size_t size() const { return locations.size(); }

  void resize(std::size_t n) {
    const auto m = static_cast<Eigen::Index>(n);
    mean.setZero(m);
    se.setZero(m);
    lower.setZero(m);
    upper.setZero(m);
  }

  /// Fills intervals as mean -/+ z * se.
  void set_gaussian_intervals(double z = kNormal975) {
    lower = mean - z * se;
    upper = mean + z * se;
  }
};

}  // namespace bigspatial
