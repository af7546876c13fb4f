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
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "bigspatial/basis.hpp"
#include "bigspatial/dataset.hpp"
#include "bigspatial/ensemble.hpp"
#include "bigspatial/errors.hpp"
#include "bigspatial/gpcore.hpp"
#include "bigspatial/harness/config.hpp"
#include "bigspatial/localgp.hpp"
#include "bigspatial/spectral.hpp"
#include "bigspatial/taper.hpp"
#include "bigspatial/vecchia.hpp"

namespace bigspatial::harness {

struct MethodContext {
  int workers = 1;
  std::uint64_t seed = 1;
  GridGeometry geometry;
};

using MethodFn = std::function<PredictionResult(const SpatialDataset& train, const std::vector<Location>& tests,
                                                const Json& params, const MethodContext& ctx)>;

struct MethodEntry {
  std::string id;
  MethodFn run;
};

/// Typed access to a method's params object. finish() rejects keys that
/// were never read.
class ParamReader {
 public:
  ParamReader(const Json& p, std::string method) : p_(p), method_(std::move(method)) {
    if (!p_.is_object() && !p_.is_null()) throw ConfigError(method_ + ": params must be an object");
  }

  template <typename T>
  T get(const char* key, T fallback) {
    used_.insert(key);
    if (p_.is_null()) return fallback;
    return detail::get_or<T>(p_, key, fallback, method_);
  }

  void finish() const {
    if (p_.is_null()) return;
    for (const auto& [k, v] : p_.items())
      if (!used_.count(k)) throw ConfigError(method_ + ": unknown parameter '" + k + "'");
  }

 private:
  const Json& p_;
  std::string method_;
  std::set<std::string> used_;
};

namespace detail {

inline numerics::SimplexOptions read_simplex(ParamReader& r, numerics::SimplexOptions s = {}) {
  s.max_evaluations = r.get("max_evaluations", s.max_evaluations);
  return s;
}

inline PredictionResult run_exact(const SpatialDataset& train, const std::vector<Location>& tests, const Json& params,
                                  const MethodContext& ctx) {
  ParamReader r(params, "exact-gp");
  FitOptions fo;
  fo.simplex = read_simplex(r);
  KrigeOptions ko;
  ko.max_exact_n = r.get<std::size_t>("max_n", ko.max_exact_n);
  ko.workers = ctx.workers;
  r.finish();
  const auto obs = observations(train);
  if (obs.size() > ko.max_exact_n) throw TooLarge("exact-gp: observed count exceeds the exact-method ceiling");
  const auto fit = fit_ml(obs, default_initial_spec(obs), fo);
  return krige(obs, tests, fit.spec, ko);
}

inline PredictionResult run_frk(const SpatialDataset& train, const std::vector<Location>& tests, const Json& params,
                                const MethodContext& ctx) {
  ParamReader r(params, "frk");
  basis::FrkOptions o;
  o.resolutions = r.get("resolutions", o.resolutions);
  o.coarsest_spacing = r.get("coarsest_spacing", o.coarsest_spacing);
  o.aperture_factor = r.get("aperture_factor", o.aperture_factor);
  o.fit.simplex = read_simplex(r);
  o.domain = ctx.geometry.extent;
  r.finish();
  return basis::frk_predict(basis::frk_fit(observations(train), o), tests, ctx.workers);
}

inline PredictionResult run_lk(const SpatialDataset& train, const std::vector<Location>& tests, const Json& params,
                               const MethodContext& ctx) {
  ParamReader r(params, "latticekrig");
  basis::LatticeKrigOptions o;
  o.resolutions = r.get("resolutions", o.resolutions);
  o.coarsest_spacing = r.get("coarsest_spacing", o.coarsest_spacing);
  o.margin = r.get("margin", o.margin);
  o.overlap = r.get("overlap", o.overlap);
  o.fit.simplex = read_simplex(r);
  o.domain = ctx.geometry.extent;
  r.finish();
  return basis::lk_predict(basis::lk_fit(observations(train), o), tests, ctx.workers);
}

inline PredictionResult run_pp(const SpatialDataset& train, const std::vector<Location>& tests, const Json& params,
                               const MethodContext& ctx) {
  ParamReader r(params, "pred-proc");
  basis::PredictiveProcessOptions o;
  o.knots_per_side = r.get("knots_per_side", o.knots_per_side);
  const auto placement = r.get<std::string>("placement", "grid");
  if (placement == "kmeans") o.placement = basis::KnotPlacement::kmeans;
  else if (placement != "grid") throw ConfigError("pred-proc: placement must be 'grid' or 'kmeans'");
  o.kmeans_knots = r.get("kmeans_knots", o.kmeans_knots);
  o.fit.simplex = read_simplex(r);
  o.seed = ctx.seed;
  r.finish();
  const auto obs = observations(train);
  return basis::pp_fit_predict(obs, tests, default_initial_spec(obs), o, ctx.workers).second;
}

inline PredictionResult run_partition(const SpatialDataset& train, const std::vector<Location>& tests,
                                      const Json& params, const MethodContext& ctx) {
  ParamReader r(params, "partition");
  ensemble::PartitionFitOptions o;
  o.target = r.get("target", o.target);
  o.max_sweeps = r.get("max_sweeps", o.max_sweeps);
  o.fit.simplex = read_simplex(r);
  r.finish();
  return ensemble::partition_method(observations(train), tests, o, ctx.workers);
}

inline PredictionResult run_taper(const SpatialDataset& train, const std::vector<Location>& tests, const Json& params,
                                  const MethodContext& ctx) {
  ParamReader r(params, "taper");
  const double neighbors = r.get("neighbors", 50.0);
  const int max_lag = r.get("max_lag", 10);
  const auto target = r.get<std::size_t>("target", 60);
  r.finish();
  const auto obs = observations(train);
  const auto spec = taper::taper_fit(train, max_lag, target);
  return taper::taper_predict(obs, tests, spec, taper::taper_for_neighbors(obs.locations, neighbors), ctx.workers);
}

inline PredictionResult run_nngp_response(const SpatialDataset& train, const std::vector<Location>& tests,
                                          const Json& params, const MethodContext& ctx) {
  ParamReader r(params, "nngp-response");
  vecchia::NngpOptions o;
  o.m = r.get("m", o.m);
  o.fit.simplex = read_simplex(r);
  o.workers = ctx.workers;
  r.finish();
  const auto obs = observations(train);
  return vecchia::nngp_predict(vecchia::nngp_response_fit(obs, default_initial_spec(obs), o), tests, ctx.workers);
}

inline PredictionResult run_nngp_conjugate(const SpatialDataset& train, const std::vector<Location>& tests,
                                           const Json& params, const MethodContext& ctx) {
  ParamReader r(params, "nngp-conjugate");
  const auto obs = observations(train);
  auto cfg = vecchia::default_conjugate_config(obs);
  cfg.m = r.get("m", cfg.m);
  cfg.folds = r.get("folds", cfg.folds);
  cfg.alphas = r.get("alphas", cfg.alphas);
  cfg.ranges = r.get("ranges", cfg.ranges);
  cfg.seed = ctx.seed;
  r.finish();
  return vecchia::conjugate_nngp(obs, tests, cfg, ctx.workers).prediction;
}

inline PredictionResult run_lagp(const SpatialDataset& train, const std::vector<Location>& tests, const Json& params,
                                 const MethodContext& ctx) {
  ParamReader r(params, "lagp");
  localgp::LocalGpOptions o;
  o.m0 = r.get("m0", o.m0);
  o.m = r.get("m", o.m);
  o.pool = r.get("pool", o.pool);
  r.finish();
  return localgp::lagp_batch(observations(train), tests, o, ctx.workers);
}

inline PredictionResult run_pe(const SpatialDataset& train, const std::vector<Location>& tests, const Json& params,
                               const MethodContext& ctx) {
  ParamReader r(params, "periodic-embedding");
  spectral::SpectralOptions o;
  o.tau = r.get("tau", o.tau);
  o.iterations = r.get("iterations", o.iterations);
  o.bandwidth = r.get("bandwidth", o.bandwidth);
  o.ensemble = r.get("ensemble", o.ensemble);
  o.seed = ctx.seed;
  r.finish();
  return spectral::pe_fit_predict(train, tests, o, ctx.workers);
}

inline PredictionResult run_metakriging(const SpatialDataset& train, const std::vector<Location>& tests,
                                        const Json& params, const MethodContext& ctx) {
  ParamReader r(params, "metakriging");
  ensemble::MetakrigingOptions o;
  o.subsets = r.get("subsets", o.subsets);
  o.samples = r.get("samples", o.samples);
  o.probes = r.get("probes", o.probes);
  o.fit.simplex = read_simplex(r);
  o.seed = ctx.seed;
  r.finish();
  return ensemble::metakriging(observations(train), tests, o, ctx.workers).prediction;
}

}  // namespace detail

/// Every method in competition order.
inline const std::vector<MethodEntry>& method_registry() {
  static const std::vector<MethodEntry> r = {
      {"exact-gp", detail::run_exact},
      {"frk", detail::run_frk},
      {"latticekrig", detail::run_lk},
      {"pred-proc", detail::run_pp},
      {"partition", detail::run_partition},
      {"taper", detail::run_taper},
      {"nngp-response", detail::run_nngp_response},
      {"nngp-conjugate", detail::run_nngp_conjugate},
      {"lagp", detail::run_lagp},
      {"periodic-embedding", detail::run_pe},
      {"metakriging", detail::run_metakriging},
  };
  return r;
}

inline const MethodEntry& find_method(const std::string& id) {
  for (const auto& m : method_registry())
    if (m.id == id) return m;
  throw ConfigError("unknown method '" + id + "'");
}

}  // namespace bigspatial::harness
