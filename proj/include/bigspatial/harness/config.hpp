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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bigspatial/dataset.hpp"
#include "bigspatial/errors.hpp"
#include "bigspatial/harness/split.hpp"

namespace bigspatial::harness {

using Json = nlohmann::ordered_json;

/// Desk-scale stand-in for the case-study field.
struct SimulationSpec {
  GridGeometry geometry = GridGeometry::desk_scale();
  CovarianceSpec covariance{9.0, 0.5, 0.25};
  TrendSpec trend{TrendKind::constant, Vec::Constant(1, 44.0)};
  std::uint64_t seed = 20160804;
};

struct MethodSpec {
  std::string id;
  Json params = Json::object();
};

struct RunConfig {
  std::optional<std::filesystem::path> dataset;  // simulate when unset
  SimulationSpec simulation;
  TrendKind trend = TrendKind::constant;  // mean model handed to the methods
  SplitSource split = CloudSpec{};
  std::vector<MethodSpec> methods;  // empty: every registered method
  std::filesystem::path output = "results";
  int workers = 1;
  std::uint64_t seed = 1;  // stochastic methods
};

namespace detail {

inline void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

inline GridGeometry parse_geometry(const Json& j, GridGeometry g) {
  check_keys(j, {"rows", "cols", "extent"}, "simulation.geometry");
  g.n_rows = get_or<std::size_t>(j, "rows", g.n_rows, "simulation.geometry");
  g.n_cols = get_or<std::size_t>(j, "cols", g.n_cols, "simulation.geometry");
  if (j.contains("extent")) {
    const auto e = get_or<std::vector<double>>(j, "extent", {}, "simulation.geometry");
    if (e.size() != 4 || !(e[0] < e[1]) || !(e[2] < e[3]))
      throw ConfigError("simulation.geometry.extent: expected [lon_min, lon_max, lat_min, lat_max]");
    g.extent = {e[0], e[1], e[2], e[3]};
  }
  if (g.n_rows == 0 || g.n_cols == 0) throw ConfigError("simulation.geometry: empty grid");
  return g;
}

inline TrendKind parse_trend_kind(const std::string& s) {
  if (s == "constant") return TrendKind::constant;
  if (s == "linear") return TrendKind::linear_lon_lat;
  throw ConfigError("trend: expected 'constant' or 'linear', got '" + s + "'");
}

inline const char* trend_name(TrendKind k) { return k == TrendKind::constant ? "constant" : "linear"; }

}  // namespace detail

/// Builds a RunConfig from JSON. Unknown keys are rejected. Method entries
/// are either an id string or {"id": ..., "params": {...}}.
inline RunConfig parse_config(const Json& j) {
  detail::check_keys(j, {"dataset", "simulation", "trend", "split", "methods", "output", "workers", "seed"}, "config");
  RunConfig c;
  if (j.contains("dataset") && !j.at("dataset").is_null())
    c.dataset = std::filesystem::path(detail::get_or<std::string>(j, "dataset", "", "config"));
  if (j.contains("simulation")) {
    const auto& s = j.at("simulation");
    detail::check_keys(s, {"geometry", "partial_sill", "range", "nugget", "trend", "seed"}, "simulation");
    if (s.contains("geometry")) c.simulation.geometry = detail::parse_geometry(s.at("geometry"), c.simulation.geometry);
    auto& cov = c.simulation.covariance;
    cov.partial_sill = detail::get_or(s, "partial_sill", cov.partial_sill, "simulation");
    cov.range = detail::get_or(s, "range", cov.range, "simulation");
    cov.nugget = detail::get_or(s, "nugget", cov.nugget, "simulation");
    if (!cov.valid()) throw ConfigError("simulation: invalid covariance parameters");
    c.simulation.seed = detail::get_or<std::uint64_t>(s, "seed", c.simulation.seed, "simulation");
    if (s.contains("trend")) {
      const auto& t = s.at("trend");
      detail::check_keys(t, {"kind", "coefficients"}, "simulation.trend");
      c.simulation.trend.kind = detail::parse_trend_kind(detail::get_or<std::string>(t, "kind", "constant", "simulation.trend"));
      const auto coef = detail::get_or<std::vector<double>>(t, "coefficients", {44.0}, "simulation.trend");
      c.simulation.trend.coefficients = Eigen::Map<const Vec>(coef.data(), static_cast<Eigen::Index>(coef.size()));
      if (c.simulation.trend.coefficients.size() != c.simulation.trend.rank())
        throw ConfigError("simulation.trend: coefficient count does not match the trend kind");
    }
  }
  c.trend = detail::parse_trend_kind(detail::get_or<std::string>(j, "trend", "constant", "config"));
  if (j.contains("split")) {
    const auto& s = j.at("split");
    detail::check_keys(s, {"cloud", "mask"}, "split");
    if (s.contains("cloud") == s.contains("mask")) throw ConfigError("split: give exactly one of 'cloud' or 'mask'");
    if (s.contains("cloud")) {
      const auto& k = s.at("cloud");
      detail::check_keys(k, {"seed", "disks", "radius_min", "radius_max", "scatter"}, "split.cloud");
      CloudSpec cs;
      cs.seed = detail::get_or<std::uint64_t>(k, "seed", cs.seed, "split.cloud");
      cs.disks = detail::get_or<std::size_t>(k, "disks", cs.disks, "split.cloud");
      cs.radius_min = detail::get_or(k, "radius_min", cs.radius_min, "split.cloud");
      cs.radius_max = detail::get_or(k, "radius_max", cs.radius_max, "split.cloud");
      cs.scatter = detail::get_or(k, "scatter", cs.scatter, "split.cloud");
      c.split = cs;
    } else {
      const auto& m = s.at("mask");
      detail::check_keys(m, {"path", "masked_when"}, "split.mask");
      MaskFile mf;
      mf.path = detail::get_or<std::string>(m, "path", "", "split.mask");
      if (mf.path.empty()) throw ConfigError("split.mask.path is required");
      const auto when = detail::get_or<std::string>(m, "masked_when", "nonzero", "split.mask");
      if (when == "nonzero") mf.masked_when = MaskEncoding::nonzero;
      else if (when == "missing") mf.masked_when = MaskEncoding::missing;
      else throw ConfigError("split.mask.masked_when: expected 'nonzero' or 'missing'");
      c.split = mf;
    }
  }
  if (j.contains("methods")) {
    const auto& ms = j.at("methods");
    if (!ms.is_array()) throw ConfigError("methods: expected an array");
    for (const auto& m : ms) {
      MethodSpec spec;
      if (m.is_string()) {
        spec.id = m.get<std::string>();
      } else {
        detail::check_keys(m, {"id", "params"}, "methods[]");
        spec.id = detail::get_or<std::string>(m, "id", "", "methods[]");
        if (m.contains("params")) spec.params = m.at("params");
        if (!spec.params.is_object()) throw ConfigError("methods[]." + spec.id + ".params: expected an object");
      }
      c.methods.push_back(spec);
    }
  }
  c.output = detail::get_or<std::string>(j, "output", c.output.string(), "config");
  c.workers = detail::get_or(j, "workers", c.workers, "config");
  if (c.workers < 1) throw ConfigError("workers must be at least 1");
  c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed, "config");
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  try {
    return parse_config(Json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

/// Canonical JSON form; parse_config(to_json(c)) reproduces c.
inline Json to_json(const RunConfig& c) {
  Json j;
  j["dataset"] = c.dataset ? Json(c.dataset->string()) : Json(nullptr);
  const auto& s = c.simulation;
  const auto& g = s.geometry;
  j["simulation"] = {
      {"geometry", {{"rows", g.n_rows}, {"cols", g.n_cols},
                    {"extent", {g.extent.lon_min, g.extent.lon_max, g.extent.lat_min, g.extent.lat_max}}}},
      {"partial_sill", s.covariance.partial_sill},
      {"range", s.covariance.range},
      {"nugget", s.covariance.nugget},
      {"trend", {{"kind", detail::trend_name(s.trend.kind)},
                 {"coefficients", std::vector<double>(s.trend.coefficients.data(), s.trend.coefficients.data() + s.trend.coefficients.size())}}},
      {"seed", s.seed}};
  j["trend"] = detail::trend_name(c.trend);
  if (const auto* cs = std::get_if<CloudSpec>(&c.split)) {
    j["split"] = {{"cloud", {{"seed", cs->seed}, {"disks", cs->disks}, {"radius_min", cs->radius_min},
                             {"radius_max", cs->radius_max}, {"scatter", cs->scatter}}}};
  } else {
    const auto& m = std::get<MaskFile>(c.split);
    j["split"] = {{"mask", {{"path", m.path.string()}, {"masked_when", m.masked_when == MaskEncoding::missing ? "missing" : "nonzero"}}}};
  }
  Json ms = Json::array();
  for (const auto& m : c.methods) ms.push_back({{"id", m.id}, {"params", m.params}});
  j["methods"] = ms;
  j["output"] = c.output.string();
  j["workers"] = c.workers;
  j["seed"] = c.seed;
  return j;
}

}  // namespace bigspatial::harness
