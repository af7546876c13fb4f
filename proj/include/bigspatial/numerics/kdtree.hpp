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
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <utility>
#include <vector>

#include "bigspatial/errors.hpp"
#include "bigspatial/geometry.hpp"

namespace bigspatial::numerics {

/// Balanced 2-D k-d tree. Queries are const and thread-safe.
///
/// Neighbor lists are ordered by increasing distance; equal distances are
/// ordered by increasing point index, so results never depend on tree shape.
class KdTree {
 public:
  KdTree() = default;

  explicit KdTree(std::vector<Location> points) : points_(std::move(points)) {
    index_.resize(points_.size());
    std::iota(index_.begin(), index_.end(), std::size_t{0});
    if (!points_.empty()) root_ = build(0, points_.size());
  }

  std::size_t size() const { return points_.size(); }
  const std::vector<Location>& points() const { return points_; }

  /// The m nearest points to s. When `exclude` is set that index is skipped.
  std::vector<std::size_t> knn(const Location& s, std::size_t m,
                               std::optional<std::size_t> exclude = std::nullopt) const {
    const std::size_t available = points_.size() - (exclude && *exclude < points_.size() ? 1 : 0);
    if (m > available) throw InsufficientPoints("knn: requested more neighbors than points");
    std::vector<std::size_t> out;
    if (m == 0) return out;

    std::priority_queue<Candidate> heap;  // worst candidate on top
    search(root_, s, m, exclude, heap);
    out.resize(heap.size());
    for (std::size_t i = out.size(); i-- > 0;) {
      out[i] = heap.top().index;
      heap.pop();
    }
    return out;
  }

  /// All points with distance strictly below `radius`, ordered by index.
  std::vector<std::size_t> within(const Location& s, double radius) const {
    std::vector<std::size_t> out;
    if (points_.empty()) return out;
    collect(root_, s, radius * radius, out);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  struct Node {
    std::size_t begin = 0, end = 0;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    std::size_t left = 0, right = 0;
    double lo[2] = {0, 0}, hi[2] = {0, 0};
  };

  struct Candidate {
    double d2;
    std::size_t index;
    bool operator<(const Candidate& o) const {
      return d2 < o.d2 || (d2 == o.d2 && index < o.index);
    }
  };

  static constexpr std::size_t kLeafSize = 8;

  static double coord(const Location& p, int axis) { return axis == 0 ? p.lon : p.lat; }

  std::size_t build(std::size_t begin, std::size_t end) {
    Node node;
    node.begin = begin;
    node.end = end;
    node.lo[0] = node.lo[1] = std::numeric_limits<double>::infinity();
    node.hi[0] = node.hi[1] = -std::numeric_limits<double>::infinity();
    for (std::size_t i = begin; i < end; ++i) {
      const Location& p = points_[index_[i]];
      for (int a = 0; a < 2; ++a) {
        node.lo[a] = std::min(node.lo[a], coord(p, a));
        node.hi[a] = std::max(node.hi[a], coord(p, a));
      }
    }
    const std::size_t id = nodes_.size();
    nodes_.push_back(node);
    if (end - begin <= kLeafSize) return id;

    const int axis = (node.hi[0] - node.lo[0]) >= (node.hi[1] - node.lo[1]) ? 0 : 1;
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(index_.begin() + static_cast<std::ptrdiff_t>(begin),
                     index_.begin() + static_cast<std::ptrdiff_t>(mid),
                     index_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) {
                       return coord(points_[a], axis) < coord(points_[b], axis);
                     });
    const double split = coord(points_[index_[mid]], axis);
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  static double box_distance2(const Node& n, const Location& s) {
    double d2 = 0.0;
    for (int a = 0; a < 2; ++a) {
      const double c = coord(s, a);
      double d = 0.0;
      if (c < n.lo[a]) d = n.lo[a] - c;
      else if (c > n.hi[a]) d = c - n.hi[a];
      d2 += d * d;
    }
    return d2;
  }

  void search(std::size_t id, const Location& s, std::size_t m, std::optional<std::size_t> exclude,
              std::priority_queue<Candidate>& heap) const {
    const Node& n = nodes_[id];
    if (heap.size() == m && box_distance2(n, s) > heap.top().d2) return;
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const std::size_t idx = index_[i];
        if (exclude && idx == *exclude) continue;
        Candidate c{squared_distance(points_[idx], s), idx};
        if (heap.size() < m) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      return;
    }
    const bool go_left_first = coord(s, n.axis) < n.split;
    search(go_left_first ? n.left : n.right, s, m, exclude, heap);
    search(go_left_first ? n.right : n.left, s, m, exclude, heap);
  }

  void collect(std::size_t id, const Location& s, double r2, std::vector<std::size_t>& out) const {
    const Node& n = nodes_[id];
    if (box_distance2(n, s) >= r2) return;
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i)
        if (squared_distance(points_[index_[i]], s) < r2) out.push_back(index_[i]);
      return;
    }
    collect(n.left, s, r2, out);
    collect(n.right, s, r2, out);
  }

  std::vector<Location> points_;
  std::vector<std::size_t> index_;
  std::vector<Node> nodes_;
  std::size_t root_ = 0;
};

}  // namespace bigspatial::numerics
