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
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "bigspatial/dataset.hpp"
#include "bigspatial/errors.hpp"
#include "bigspatial/harness/io.hpp"
#include "bigspatial/numerics/random.hpp"

namespace bigspatial::harness {

/// Union of random disks plus independent scatter, in grid-cell units.
struct CloudSpec {
  std::uint64_t seed = 20160806;
  std::size_t disks = 6;
  double radius_min = 3.0;
  double radius_max = 12.0;
  double scatter = 0.01;
};

enum class MaskEncoding { nonzero, missing };

/// Grid CSV whose cells flag the held-out pattern: value != 0 (nonzero) or
/// NA (missing) marks a masked cell.
struct MaskFile {
  std::filesystem::path path;
  MaskEncoding masked_when = MaskEncoding::nonzero;
};

using SplitSource = std::variant<CloudSpec, MaskFile>;

/// Training data with the held-out cells removed, plus the held-out sites
/// and their values. Only `train` and `tests` are handed to methods.
struct Split {
  SpatialDataset train;
  std::vector<std::size_t> test_cells;
  std::vector<Location> tests;
  std::vector<double> truth;
};

inline std::vector<std::uint8_t> cloud_mask(const GridGeometry& g, const CloudSpec& c) {
  if (!(c.radius_min >= 0.0 && c.radius_max >= c.radius_min)) throw ConfigError("cloud: need 0 <= radius_min <= radius_max");
  if (!(c.scatter >= 0.0 && c.scatter <= 1.0)) throw ConfigError("cloud: scatter must be a fraction");
  std::vector<std::uint8_t> m(g.cell_count(), 0);
  Rng rng(c.seed);
  for (std::size_t k = 0; k < c.disks; ++k) {
    const double r0 = rng.uniform(0.0, static_cast<double>(g.n_rows));
    const double c0 = rng.uniform(0.0, static_cast<double>(g.n_cols));
    const double rad = rng.uniform(c.radius_min, c.radius_max);
    for (std::size_t r = 0; r < g.n_rows; ++r)
      for (std::size_t col = 0; col < g.n_cols; ++col) {
        const double dr = static_cast<double>(r) + 0.5 - r0, dc = static_cast<double>(col) + 0.5 - c0;
        if (dr * dr + dc * dc <= rad * rad) m[g.cell(r, col)] = 1;
      }
  }
  for (auto& v : m)
    if (rng.uniform() < c.scatter) v = 1;
  return m;
}

inline std::vector<std::uint8_t> load_mask(const MaskFile& f, const GridGeometry& expected) {
  const auto d = load_dataset(f.path);
  if (!(d.geometry.n_rows == expected.n_rows && d.geometry.n_cols == expected.n_cols))
    throw GeometryMismatch("mask " + f.path.string() + " does not match the dataset grid");
  std::vector<std::uint8_t> m(d.geometry.cell_count(), 0);
  for (std::size_t i = 0; i < m.size(); ++i)
    m[i] = f.masked_when == MaskEncoding::missing ? !d.observed[i] : (d.observed[i] && d.values[i] != 0.0);
  return m;
}

/// train = observed and not masked; test = observed and masked.
inline Split split_with_mask(const SpatialDataset& d, const std::vector<std::uint8_t>& mask) {
  if (mask.size() != d.geometry.cell_count()) throw GeometryMismatch("split: mask size differs from the grid");
  Split s;
  s.train = d;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!d.observed[i] || !mask[i]) continue;
    s.test_cells.push_back(i);
    s.tests.push_back(d.geometry.center(i));
    s.truth.push_back(d.values[i]);
    s.train.clear(i);
  }
  if (s.tests.empty()) throw EmptyTest("split: no observed cell is masked");
  if (s.train.observed_count() == 0) throw EmptyTrain("split: every observed cell is masked");
  return s;
}

inline Split make_split(const SpatialDataset& d, const SplitSource& src) {
  if (const auto* c = std::get_if<CloudSpec>(&src)) return split_with_mask(d, cloud_mask(d.geometry, *c));
  return split_with_mask(d, load_mask(std::get<MaskFile>(src), d.geometry));
}

}  // namespace bigspatial::harness
