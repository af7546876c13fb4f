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
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bigspatial/dataset.hpp"
#include "bigspatial/errors.hpp"

namespace bigspatial::harness {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string where(const std::string& path, std::size_t line) { return path + ":" + std::to_string(line) + ": "; }

inline double parse_number(std::string_view s, const std::string& path, std::size_t line) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw ParseError(where(path, line) + "invalid number '" + std::string(s) + "'");
  return v;
}

/// Round-trip decimal form of a double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Sorted cluster representatives of `v` (values closer than tol merge).
inline std::vector<double> distinct(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string() + " for reading");
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& p, bool binary = false) {
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  return out;
}

}  // namespace detail

/// One parsed lon,lat,value row; `present` is false for NA.
struct CsvPoint {
  Location location;
  double value = 0.0;
  bool present = false;
};

struct CsvTable {
  std::vector<CsvPoint> rows;
  std::optional<GridGeometry> declared;  // from a "# grid" line
};

/// Reads a "lon,lat,value" file. Lines starting with '#' are comments; a
/// comment of the form "# grid <rows> <cols> <lon_min> <lon_max> <lat_min>
/// <lat_max>" declares the geometry.
inline CsvTable read_points_csv(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  const std::string name = path.string();
  CsvTable t;
  std::string line;
  std::size_t no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++no;
    const auto s = detail::trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      std::istringstream ss{std::string(s.substr(1))};
      std::string word;
      ss >> word;
      if (word == "grid") {
        GridGeometry g;
        if (!(ss >> g.n_rows >> g.n_cols >> g.extent.lon_min >> g.extent.lon_max >> g.extent.lat_min >> g.extent.lat_max))
          throw ParseError(detail::where(name, no) + "malformed grid declaration");
        t.declared = g;
      }
      continue;
    }
    const auto f = detail::split_commas(s);
    if (!header) {
      if (f.size() != 3 || f[0] != "lon" || f[1] != "lat" || f[2] != "value")
        throw ParseError(detail::where(name, no) + "expected header lon,lat,value");
      header = true;
      continue;
    }
    if (f.size() != 3) throw ParseError(detail::where(name, no) + "expected 3 fields, found " + std::to_string(f.size()));
    CsvPoint p;
    p.location = {detail::parse_number(f[0], name, no), detail::parse_number(f[1], name, no)};
    if (f[2] != "NA") {
      p.value = detail::parse_number(f[2], name, no);
      p.present = true;
    }
    t.rows.push_back(p);
  }
  if (!header) throw ParseError(detail::where(name, no) + "missing header lon,lat,value");
  return t;
}

/// Places table rows on a grid. Rows must be row-major, north to south and
/// west to east within a row. The geometry is inferred from the distinct
/// coordinates unless declared, in which case every row must sit on the
/// declared cell centers.
inline SpatialDataset grid_from_table(const CsvTable& t, const std::string& name = "<table>") {
  if (t.rows.empty()) throw ParseError(name + ": no data rows");
  GridGeometry g;
  if (t.declared) {
    g = *t.declared;
  } else {
    std::vector<double> lons, lats;
    for (const auto& r : t.rows) lons.push_back(r.location.lon), lats.push_back(r.location.lat);
    const auto bl = bounding_box([&] {
      std::vector<Location> v;
      for (const auto& r : t.rows) v.push_back(r.location);
      return v;
    }());
    const double tol = 1e-9 * std::max(1.0, bl.diameter());
    const auto ulon = detail::distinct(lons, tol), ulat = detail::distinct(lats, tol);
    g.n_cols = ulon.size();
    g.n_rows = ulat.size();
    g.extent = {ulon.front(), ulon.back(), ulat.front(), ulat.back()};
  }
  if (g.cell_count() != t.rows.size())
    throw GeometryMismatch(name + ": " + std::to_string(t.rows.size()) + " rows do not fill a " + std::to_string(g.n_rows) +
                           " x " + std::to_string(g.n_cols) + " grid");
  const double tol = 1e-6 * std::max({g.lon_step(), g.lat_step(), 1e-9});
  auto d = SpatialDataset::empty(g);
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const auto c = g.center(k);
    const auto& p = t.rows[k].location;
    if (std::abs(c.lon - p.lon) > tol || std::abs(c.lat - p.lat) > tol)
      throw GeometryMismatch(name + ": row " + std::to_string(k + 1) + " at (" + detail::format_double(p.lon) + ", " +
                             detail::format_double(p.lat) + ") is off the grid cell center");
    if (t.rows[k].present) d.set(k, t.rows[k].value);
  }
  return d;
}

inline SpatialDataset load_dataset(const std::filesystem::path& path) {
  return grid_from_table(read_points_csv(path), path.string());
}

/// Writes the geometry declaration, header and one row per cell.
inline void save_dataset(const SpatialDataset& d, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  const auto& g = d.geometry;
  out << "# grid " << g.n_rows << ' ' << g.n_cols << ' ' << detail::format_double(g.extent.lon_min) << ' '
      << detail::format_double(g.extent.lon_max) << ' ' << detail::format_double(g.extent.lat_min) << ' '
      << detail::format_double(g.extent.lat_max) << '\n';
  out << "lon,lat,value\n";
  for (std::size_t k = 0; k < g.cell_count(); ++k) {
    const auto c = g.center(k);
    out << detail::format_double(c.lon) << ',' << detail::format_double(c.lat) << ','
        << (d.observed[k] ? detail::format_double(d.values[k]) : std::string("NA")) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

/// Writes lon,lat[,value] rows for scattered locations.
inline void save_points(const std::vector<Location>& locs, const std::vector<double>* values,
                        const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << (values ? "lon,lat,value\n" : "lon,lat\n");
  for (std::size_t i = 0; i < locs.size(); ++i) {
    out << detail::format_double(locs[i].lon) << ',' << detail::format_double(locs[i].lat);
    if (values) out << ',' << detail::format_double((*values)[i]);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

/// Reads a lon,lat file (header required; a value column is ignored).
inline std::vector<Location> load_locations(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  const std::string name = path.string();
  std::vector<Location> out;
  std::string line;
  std::size_t no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++no;
    const auto s = detail::trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto f = detail::split_commas(s);
    if (!header) {
      if (f.size() < 2 || f[0] != "lon" || f[1] != "lat") throw ParseError(detail::where(name, no) + "expected header lon,lat");
      header = true;
      continue;
    }
    if (f.size() < 2) throw ParseError(detail::where(name, no) + "expected lon,lat");
    out.push_back({detail::parse_number(f[0], name, no), detail::parse_number(f[1], name, no)});
  }
  if (!header) throw ParseError(detail::where(name, no) + "missing header lon,lat");
  return out;
}

}  // namespace bigspatial::harness
