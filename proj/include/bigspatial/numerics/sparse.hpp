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
#include <memory>
#include <vector>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "bigspatial/errors.hpp"
#include "bigspatial/numerics/dense.hpp"

namespace bigspatial {

// Compressed sparse column storage. Symmetric matrices keep only the lower
// triangle unless noted otherwise.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

namespace numerics {

/// Fill-reducing sparse Cholesky: P A P' = L L' with an approximate minimum
/// degree permutation P. Reads the lower triangle of A only.
class SparseCholesky {
 public:
  using Permutation = Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>;

  SparseCholesky() = default;

  explicit SparseCholesky(const SparseMatrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("SparseCholesky: matrix is not square");
    llt_ = std::make_shared<Solver>();
    llt_->compute(a);
    if (llt_->info() != Eigen::Success) throw NotPositiveDefinite("sparse Cholesky: non-positive pivot");
    const SparseMatrix& l = factor();
    log_det_ = 0.0;
    for (int j = 0; j < l.outerSize(); ++j) {
      SparseMatrix::InnerIterator it(l, j);
      if (!it || it.row() != j || !(it.value() > 0.0))
        throw NotPositiveDefinite("sparse Cholesky: non-positive pivot");
      log_det_ += 2.0 * std::log(it.value());
    }
  }

  Eigen::Index size() const { return llt_->rows(); }
  const Permutation& permutation() const { return llt_->permutationP(); }
  const SparseMatrix& factor() const { return llt_->matrixL().nestedExpression(); }
  double log_determinant() const { return log_det_; }

  template <typename Derived>
  Mat solve(const Eigen::MatrixBase<Derived>& b) const {
    return llt_->solve(b);
  }

  Vec solve_vec(const Vec& b) const { return llt_->solve(b); }

  /// L^{-1} P b, so that b' A^{-1} b = |half_solve(b)|^2.
  template <typename Derived>
  Mat half_solve(const Eigen::MatrixBase<Derived>& b) const {
    Mat pb = llt_->permutationP() * b;
    llt_->matrixL().solveInPlace(pb);
    return pb;
  }

 private:
  using Solver = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;
  std::shared_ptr<Solver> llt_;
  double log_det_ = 0.0;
};

inline SparseCholesky sparse_cholesky(const SparseMatrix& a) { return SparseCholesky(a); }

/// Solves L x = b (or L' x = b) for a sparse lower-triangular L.
inline Vec triangular_solve(const SparseMatrix& l, const Vec& b, bool transposed) {
  if (l.rows() != l.cols() || l.rows() != b.size())
    throw std::invalid_argument("triangular_solve: dimension mismatch");
  for (int j = 0; j < l.outerSize(); ++j) {
    SparseMatrix::InnerIterator it(l, j);
    while (it && it.row() < j) ++it;
    if (!it || it.row() != j || it.value() == 0.0)
      throw SingularFactor("triangular_solve: zero on the diagonal");
  }
  if (transposed) return l.triangularView<Eigen::Lower>().transpose().solve(b);
  return l.triangularView<Eigen::Lower>().solve(b);
}

/// Full symmetric matrix from lower-triangle storage.
inline SparseMatrix symmetric_from_lower(const SparseMatrix& lower) {
  SparseMatrix full = lower.selfadjointView<Eigen::Lower>();
  return full;
}

}  // namespace numerics
}  // namespace bigspatial
