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

#include <Eigen/Dense>

#include "bigspatial/errors.hpp"

namespace bigspatial {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace numerics {

/// Dense Cholesky factor A = L L'. Immutable after construction.
class DenseCholesky {
 public:
  DenseCholesky() = default;

  explicit DenseCholesky(const Mat& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("DenseCholesky: matrix is not square");
    llt_.compute(a);
    if (llt_.info() != Eigen::Success) throw NotPositiveDefinite("dense Cholesky: non-positive pivot");
    const auto diag = llt_.matrixLLT().diagonal();
    log_det_ = 0.0;
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
      if (!(diag(i) > 0.0) || !std::isfinite(diag(i)))
        throw NotPositiveDefinite("dense Cholesky: non-positive pivot");
      log_det_ += 2.0 * std::log(diag(i));
    }
  }

  Eigen::Index size() const { return llt_.matrixLLT().rows(); }
  Mat matrix_l() const { return llt_.matrixL(); }
  double log_determinant() const { return log_det_; }

  /// L^{-1} b
  template <typename Derived>
  Mat half_solve(const Eigen::MatrixBase<Derived>& b) const {
    return llt_.matrixL().solve(b);
  }

  /// A^{-1} b
  template <typename Derived>
  Mat solve(const Eigen::MatrixBase<Derived>& b) const {
    return llt_.solve(b);
  }

  Vec solve_vec(const Vec& b) const { return llt_.solve(b); }

 private:
  Eigen::LLT<Mat> llt_;
  double log_det_ = 0.0;
};

/// Lower-triangular factor L with L L' = A.
inline Mat dense_cholesky(const Mat& a) { return DenseCholesky(a).matrix_l(); }

/// Solves L x = b, or L' x = b when `transposed`.
inline Vec triangular_solve(const Mat& l, const Vec& b, bool transposed) {
  if (l.rows() != l.cols() || l.rows() != b.size())
    throw std::invalid_argument("triangular_solve: dimension mismatch");
  for (Eigen::Index i = 0; i < l.rows(); ++i)
    if (l(i, i) == 0.0) throw SingularFactor("triangular_solve: zero on the diagonal");
  if (transposed) return l.triangularView<Eigen::Lower>().transpose().solve(b);
  return l.triangularView<Eigen::Lower>().solve(b);
}

}  // namespace numerics
}  // namespace bigspatial
