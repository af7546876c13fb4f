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

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bigspatial/harness.hpp"

namespace bh = bigspatial::harness;

namespace {

bh::RunConfig config_or_default(const std::string& path) {
  return path.empty() ? bh::RunConfig{} : bh::load_config(path);
}

std::vector<bh::MethodSpec> parse_method_list(const std::string& s) {
  std::vector<bh::MethodSpec> out;
  std::stringstream ss(s);
  std::string id;
  while (std::getline(ss, id, ','))
    if (!id.empty()) out.push_back({id, bh::Json::object()});
  return out;
}

int cmd_simulate(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out) {
  auto c = config_or_default(config);
  if (seed) c.simulation.seed = *seed;
  c.dataset.reset();
  bh::save_dataset(bh::load_or_simulate(c), out);
  std::cout << "wrote " << out << '\n';
  return 0;
}

int cmd_split(const std::string& config, const std::string& out) {
  const auto c = config_or_default(config);
  const auto s = bh::make_split(bh::load_or_simulate(c), c.split);
  const std::filesystem::path dir(out);
  bh::save_dataset(s.train, dir / "train.csv");
  bh::save_points(s.tests, nullptr, dir / "tests.csv");
  bh::save_points(s.tests, &s.truth, dir / "truth.csv");
  std::cout << "train " << s.train.observed_count() << ", test " << s.tests.size() << '\n';
  return 0;
}

int cmd_run(const std::string& config, const std::string& methods, std::optional<int> workers,
            std::optional<std::uint64_t> seed, const std::string& out) {
  auto c = config_or_default(config);
  if (!methods.empty()) c.methods = parse_method_list(methods);
  if (workers) c.workers = *workers;
  if (seed) c.seed = *seed;
  if (!out.empty()) c.output = out;
  if (c.workers < 1) throw bigspatial::ConfigError("--workers must be at least 1");
  const auto r = bh::run_competition(c);
  bh::write_outputs(r, c, c.output);
  std::cout << "train " << r.split.train.observed_count() << ", test " << r.split.tests.size() << '\n';
  for (const auto& o : r.outcomes) {
    std::cout << o.report.method << ": ";
    if (o.report.failed) std::cout << "FAILED (" << o.report.message << ")\n";
    else
      std::cout << "RMSE " << o.report.rmse << ", CVG " << o.report.coverage << ", " << o.report.minutes * 60.0 << " s\n";
  }
  return r.all_succeeded() ? 0 : 1;
}

int cmd_score(const std::string& truth, const std::vector<std::string>& preds, const std::string& out) {
  const auto t = bh::read_truth_csv(truth);
  std::vector<bigspatial::ScoreReport> reports;
  for (const auto& p : preds) {
    const auto pr = bh::read_predictions_csv(p);
    auto r = bigspatial::scoring::score(t, pr);
    r.method = pr.method;
    reports.push_back(r);
  }
  bh::write_scores_csv(reports, out);
  std::cout << "wrote " << out << '\n';
  return 0;
}

int cmd_export(const std::string& train, const std::string& preds, const std::string& out) {
  const auto d = bh::load_dataset(train);
  const auto p = bh::read_predictions_csv(preds);
  const auto [lo, hi] = bh::training_range(d);
  bh::write_pgm(d.geometry, bh::surface(d, p.locations, p.mean), lo, hi, out);
  std::cout << "wrote " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial prediction competition on gridded data"};
  app.require_subcommand(1);

  std::string config, out, methods, truth, train, pred_file;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::vector<std::string> preds;

  auto* sim = app.add_subcommand("simulate", "Draw a Gaussian-process field and write it as CSV");
  sim->add_option("--config", config, "JSON config");
  sim->add_option("--seed", seed, "Simulation seed");
  sim->add_option("--out", out, "Output CSV")->required();

  auto* split = app.add_subcommand("split", "Write train.csv, tests.csv and truth.csv");
  split->add_option("--config", config, "JSON config");
  split->add_option("--out", out, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Run methods and write scores, predictions and surfaces");
  run->add_option("--config", config, "JSON config");
  run->add_option("--methods", methods, "Comma-separated method ids");
  run->add_option("--workers", workers, "Worker threads");
  run->add_option("--seed", seed, "Seed for stochastic methods");
  run->add_option("--out", out, "Output directory");

  auto* score = app.add_subcommand("score", "Score prediction files against truth");
  score->add_option("--truth", truth, "lon,lat,value CSV")->required();
  score->add_option("--predictions", preds, "Prediction CSVs")->required();
  score->add_option("--out", out, "scores.csv path")->required();

  auto* exp = app.add_subcommand("export", "Write a PGM surface from training data and predictions");
  exp->add_option("--train", train, "Training grid CSV")->required();
  exp->add_option("--predictions", pred_file, "Prediction CSV")->required();
  exp->add_option("--out", out, "PGM path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return cmd_simulate(config, seed, out);
    if (*split) return cmd_split(config, out);
    if (*run) return cmd_run(config, methods, workers, seed, out);
    if (*score) return cmd_score(truth, preds, out);
    if (*exp) return cmd_export(train, pred_file, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
