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

#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bigspatial/dataset.hpp"
#include "bigspatial/errors.hpp"
#include "bigspatial/gpcore.hpp"
#include "bigspatial/harness/config.hpp"
#include "bigspatial/harness/export.hpp"
#include "bigspatial/harness/io.hpp"
#include "bigspatial/harness/registry.hpp"
#include "bigspatial/harness/split.hpp"
#include "bigspatial/scoring.hpp"

namespace bigspatial::harness {

struct MethodRun {
  std::string id;
  MethodFn run;
  Json params = Json::object();
};

struct MethodOutcome {
  ScoreReport report;
  std::optional<PredictionResult> prediction;  // empty when the method failed
  std::vector<std::string> warnings;
};

struct CompetitionResult {
  Split split;
  std::vector<MethodOutcome> outcomes;
  double total_seconds = 0.0;

  std::vector<ScoreReport> reports() const {
    std::vector<ScoreReport> r;
    for (const auto& o : outcomes) r.push_back(o.report);
    return r;
  }
  bool all_succeeded() const {
    for (const auto& o : outcomes)
      if (o.report.failed) return false;
    return true;
  }
};

inline SpatialDataset load_or_simulate(const RunConfig& c) {
  if (c.dataset) return load_dataset(*c.dataset);
  const auto& s = c.simulation;
  return simulate_gp(s.geometry, s.covariance, s.trend, s.seed);
}

inline std::vector<MethodRun> resolve_methods(const RunConfig& c) {
  std::vector<MethodRun> out;
  if (c.methods.empty()) {
    for (const auto& m : method_registry()) out.push_back({m.id, m.run, Json::object()});
    return out;
  }
  for (const auto& m : c.methods) out.push_back({m.id, find_method(m.id).run, m.params});
  return out;
}

/// Runs each method on the training data and test sites only, then scores
/// against the held-out truth. Exceptions become FAILED rows.
inline std::vector<MethodOutcome> run_methods(const Split& split, const std::vector<MethodRun>& methods,
                                              const MethodContext& ctx) {
  std::vector<MethodOutcome> out;
  for (const auto& m : methods) {
    MethodOutcome o;
    o.report.method = m.id;
    o.report.cores = ctx.workers;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      auto p = m.run(split.train, split.tests, m.params, ctx);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (p.size() != split.tests.size()) throw LengthMismatch(m.id + ": prediction count differs from the test count");
      for (std::size_t i = 0; i < p.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        if (!std::isfinite(p.se(k))) p.se(k) = scoring::se_from_interval(p.lower(k), p.upper(k));
      }
      p.method = m.id;
      p.wall_seconds = secs;
      p.cores = ctx.workers;
      o.report = scoring::score(split.truth, p);
      o.warnings = p.warnings;
      o.prediction = std::move(p);
    } catch (const std::exception& e) {
      o.report.failed = true;
      o.report.message = e.what();
      o.report.minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
    }
    out.push_back(std::move(o));
  }
  return out;
}

inline CompetitionResult run_competition(const RunConfig& c, const std::vector<MethodRun>& methods) {
  const auto t0 = std::chrono::steady_clock::now();
  auto data = load_or_simulate(c);
  data.trend.kind = c.trend;
  CompetitionResult r;
  r.split = make_split(data, c.split);
  r.outcomes = run_methods(r.split, methods, MethodContext{c.workers, c.seed, data.geometry});
  r.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline CompetitionResult run_competition(const RunConfig& c) { return run_competition(c, resolve_methods(c)); }

/// scores.csv, timing.csv, predictions/, surfaces/ and manifest.json under `dir`.
inline void write_outputs(const CompetitionResult& r, const RunConfig& c, const std::filesystem::path& dir) {
  const auto reports = r.reports();
  write_scores_csv(reports, dir / "scores.csv");
  write_timing_csv(reports, dir / "timing.csv");
  const auto [lo, hi] = training_range(r.split.train);
  Json files = Json::array({"scores.csv", "timing.csv"});
  Json methods = Json::array();
  for (const auto& o : r.outcomes) {
    Json m = {{"id", o.report.method},
              {"status", o.report.failed ? "FAILED" : "ok"},
              {"message", o.report.message},
              {"warnings", o.warnings},
              {"minutes", o.report.minutes},
              {"cores", o.report.cores}};
    if (o.prediction) {
      const auto pred = "predictions/" + o.report.method + ".csv";
      const auto pgm = "surfaces/" + o.report.method + ".pgm";
      write_predictions_csv(*o.prediction, dir / pred);
      write_pgm(r.split.train.geometry, surface(r.split.train, o.prediction->locations, o.prediction->mean), lo, hi,
                dir / pgm);
      files.push_back(pred);
      files.push_back(pgm);
    }
    methods.push_back(m);
  }
  files.push_back("manifest.json");
  Json man;
  man["config"] = to_json(c);
  man["seeds"] = {{"methods", c.seed}, {"simulation", c.dataset ? Json(nullptr) : Json(c.simulation.seed)}};
  if (const auto* cs = std::get_if<CloudSpec>(&c.split)) man["seeds"]["split"] = cs->seed;
  man["split"] = {{"train", r.split.train.observed_count()}, {"test", r.split.tests.size()}};
  man["surface"] = {{"lo", lo}, {"hi", hi}, {"empty_gray", 0}, {"gray_min", 1}, {"gray_max", 255}};
  man["methods"] = methods;
  man["total_minutes"] = r.total_seconds / 60.0;
  man["files"] = files;
  auto out = detail::open_out(dir / "manifest.json");
  out << man.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + (dir / "manifest.json").string());
}

}  // namespace bigspatial::harness
