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
#include <vector>

namespace bigspatial {

/// Longitude/latitude in decimal degrees.
struct Location {
  double lon = 0.0;
  double lat = 0.0;

  friend bool operator==(const Location&, const Location&) = default;
};

// Distances are Euclidean in degrees; the study region is small enough that
// the planar approximation is adequate.
inline double distance(const Location& a, const Location& b) {
  return std::hypot(a.lon - b.lon, a.lat - b.lat);
}

inline double squared_distance(const Location& a, const Location& b) {
  const double dx = a.lon - b.lon;
  const double dy = a.lat - b.lat;
  return dx * dx + dy * dy;
}

struct BoundingBox {
  double lon_min = 0.0, lon_max = 0.0, lat_min = 0.0, lat_max = 0.0;

  double width() const { return lon_max - lon_min; }
  double height() const { return lat_max - lat_min; }
  double diameter() const { return std::hypot(width(), height()); }
  bool contains(const Location& s) const {
    return s.lon >= lon_min && s.lon <= lon_max && s.lat >= lat_min && s.lat <= lat_max;
  }
};

inline BoundingBox bounding_box(const std::vector<Location>& pts) {
  BoundingBox box;
  if (pts.empty()) return box;
  box.lon_min = box.lon_max = pts[0].lon;
  box.lat_min = box.lat_max = pts[0].lat;
  for (const auto& p : pts) {
    box.lon_min = std::min(box.lon_min, p.lon);
    box.lon_max = std::max(box.lon_max, p.lon);
    box.lat_min = std::min(box.lat_min, p.lat);
    box.lat_max = std::max(box.lat_max, p.lat);
  }
  return box;
}

}  // namespace bigspatial
