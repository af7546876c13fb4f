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
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "bigspatial/dataset.hpp"
#include "bigspatial/errors.hpp"
#include "bigspatial/harness/io.hpp"
#include "bigspatial/scoring.hpp"

namespace bigspatial::harness {

namespace detail {

inline std::string fixed6(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

}  // namespace detail

/// method,MAE,RMSE,CRPS,INT,CVG,status. Failed rows carry NA scores.
inline void write_scores_csv(const std::vector<ScoreReport>& reports, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "method,MAE,RMSE,CRPS,INT,CVG,status\n";
  for (const auto& r : reports) {
    out << r.method;
    if (r.failed) {
      out << ",NA,NA,NA,NA,NA,FAILED\n";
      continue;
    }
    for (double v : {r.mae, r.rmse, r.crps, r.interval, r.coverage}) out << ',' << detail::fixed6(v);
    out << ",ok\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

/// method,minutes,cores.
inline void write_timing_csv(const std::vector<ScoreReport>& reports, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "method,minutes,cores\n";
  for (const auto& r : reports) out << r.method << ',' << detail::fixed6(r.minutes) << ',' << r.cores << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

/// lon,lat,mean,se,lower,upper in round-trip precision.
inline void write_predictions_csv(const PredictionResult& p, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "lon,lat,mean,se,lower,upper\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out << detail::format_double(p.locations[i].lon) << ',' << detail::format_double(p.locations[i].lat) << ','
        << detail::format_double(p.mean(k)) << ',' << detail::format_double(p.se(k)) << ','
        << detail::format_double(p.lower(k)) << ',' << detail::format_double(p.upper(k)) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline PredictionResult read_predictions_csv(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  const std::string name = path.string();
  std::vector<std::array<double, 6>> rows;
  std::string line;
  std::size_t no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++no;
    const auto s = detail::trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto f = detail::split_commas(s);
    if (!header) {
      if (f.size() != 6 || f[0] != "lon" || f[1] != "lat" || f[2] != "mean" || f[3] != "se" || f[4] != "lower" ||
          f[5] != "upper")
        throw ParseError(detail::where(name, no) + "expected header lon,lat,mean,se,lower,upper");
      header = true;
      continue;
    }
    if (f.size() != 6) throw ParseError(detail::where(name, no) + "expected 6 fields, found " + std::to_string(f.size()));
    std::array<double, 6> r{};
    for (std::size_t j = 0; j < 6; ++j) r[j] = detail::parse_number(f[j], name, no);
    rows.push_back(r);
  }
  if (!header) throw ParseError(detail::where(name, no) + "missing header lon,lat,mean,se,lower,upper");
  PredictionResult p;
  p.method = path.stem().string();
  p.resize(rows.size());
  p.locations.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    p.locations[i] = {rows[i][0], rows[i][1]};
    p.mean(k) = rows[i][2];
    p.se(k) = rows[i][3];
    p.lower(k) = rows[i][4];
    p.upper(k) = rows[i][5];
  }
  return p;
}

/// Reads lon,lat,value truth rows; NA is rejected.
inline std::vector<double> read_truth_csv(const std::filesystem::path& path) {
  const auto t = read_points_csv(path);
  std::vector<double> v;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (!t.rows[i].present) throw ParseError(path.string() + ": truth row " + std::to_string(i + 1) + " is NA");
    v.push_back(t.rows[i].value);
  }
  return v;
}

/// Per-cell surface: observed training values, then predicted means at the
/// nearest cells. Cells with neither stay NaN.
inline std::vector<double> surface(const SpatialDataset& train, const std::vector<Location>& locs, const Vec& mean) {
  if (locs.size() != static_cast<std::size_t>(mean.size())) throw LengthMismatch("surface: locations and means differ in length");
  const auto& g = train.geometry;
  std::vector<double> s(g.cell_count(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < s.size(); ++i)
    if (train.observed[i]) s[i] = train.values[i];
  const double ls = g.lon_step(), as = g.lat_step();
  for (std::size_t i = 0; i < locs.size(); ++i) {
    const double fc = ls > 0.0 ? (locs[i].lon - g.extent.lon_min) / ls : 0.0;
    const double fr = as > 0.0 ? (g.extent.lat_max - locs[i].lat) / as : 0.0;
    const double c = std::round(fc), r = std::round(fr);
    if (c < 0.0 || r < 0.0 || c >= static_cast<double>(g.n_cols) || r >= static_cast<double>(g.n_rows) ||
        std::abs(fc - c) > 0.25 || std::abs(fr - r) > 0.25)
      throw GeometryMismatch("surface: prediction site is not on a grid cell");
    s[g.cell(static_cast<std::size_t>(r), static_cast<std::size_t>(c))] = mean(static_cast<Eigen::Index>(i));
  }
  return s;
}

/// Gray level for v on [lo, hi]: 1..255, with 0 reserved for empty cells.
inline std::uint8_t gray_level(double v, double lo, double hi) {
  if (!std::isfinite(v)) return 0;
  const double t = hi > lo ? std::clamp((v - lo) / (hi - lo), 0.0, 1.0) : 0.5;
  return static_cast<std::uint8_t>(1 + std::lround(254.0 * t));
}

/// Binary PGM, width = columns, height = rows, row 0 north.
inline void write_pgm(const GridGeometry& g, const std::vector<double>& s, double lo, double hi,
                      const std::filesystem::path& path) {
  if (s.size() != g.cell_count()) throw LengthMismatch("write_pgm: surface size differs from the grid");
  auto out = detail::open_out(path, true);
  out << "P5\n" << g.n_cols << ' ' << g.n_rows << "\n255\n";
  std::vector<char> px(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) px[i] = static_cast<char>(gray_level(s[i], lo, hi));
  out.write(px.data(), static_cast<std::streamsize>(px.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

/// Min and max of the observed training values.
inline std::pair<double, double> training_range(const SpatialDataset& train) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < train.observed.size(); ++i)
    if (train.observed[i]) lo = std::min(lo, train.values[i]), hi = std::max(hi, train.values[i]);
  if (!(lo <= hi)) throw EmptyTrain("training_range: no observed values");
  return {lo, hi};
}

}  // namespace bigspatial::harness
