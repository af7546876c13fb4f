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
#include <type_traits>

#include "bigspatial/dataset.hpp"
#include "bigspatial/errors.hpp"
#include "bigspatial/gpcore.hpp"
#include "bigspatial/numerics/dense.hpp"
#include "bigspatial/numerics/parallel.hpp"
#include "bigspatial/numerics/sparse.hpp"

namespace bigspatial::basis {

namespace detail {

inline Mat to_dense(const Mat& a) { return a; }
inline Mat to_dense(const SparseMatrix& a) { return Mat(a); }
inline SparseMatrix to_sparse(const SparseMatrix& a) { return a; }
inline SparseMatrix to_sparse(const Mat& a) { return a.sparseView(); }

}  // namespace detail

/// Covariance S = H P^{-1} H' + diag(d) handled through the K x K matrix
/// M = P + H' D^{-1} H:
///   log|S|  = log|M| - log|P| + sum log d
///   S^{-1}B = D^{-1}B - D^{-1} H M^{-1} H' D^{-1} B
/// `HMat` is Mat or SparseMatrix; `Factor` is the factorization used for M.
template <typename HMat, typename Factor>
class LowRankSystem {
 public:
  template <typename PMat>
  LowRankSystem(HMat h, const PMat& precision, double log_det_precision, Vec d) : h_(std::move(h)), d_(std::move(d)) {
    if (h_.rows() != d_.size()) throw LengthMismatch("LowRankSystem: basis rows and diagonal differ");
    if (!(d_.array() > 0.0).all()) throw NotPositiveDefinite("LowRankSystem: diagonal variance must be positive");
    dinv_ = d_.cwiseInverse();
    if constexpr (std::is_same_v<HMat, SparseMatrix>) {
      const SparseMatrix dh = dinv_.asDiagonal() * h_;
      const SparseMatrix hdh = h_.transpose() * dh;
      build(hdh, precision);
    } else {
      const Mat hdh = h_.transpose() * dinv_.asDiagonal() * h_;
      build(hdh, precision);
    }
    log_det_ = factor_.log_determinant() - log_det_precision + d_.array().log().sum();
  }

  Eigen::Index size() const { return h_.rows(); }
  Eigen::Index rank() const { return h_.cols(); }
  double log_determinant() const { return log_det_; }
  const Factor& factor() const { return factor_; }
  const Vec& diagonal() const { return d_; }

  Mat solve(const Mat& b) const {
    const Mat t = dinv_.asDiagonal() * b;
    const Mat u = h_.transpose() * t;
    const Mat v = factor_.solve(u);
    const Mat hv = h_ * v;
    return t - dinv_.asDiagonal() * hv;
  }

  GaussianProfile profile(const Vec& y, const Mat& x) const {
    Mat b(y.size(), x.cols() + 1);
    b.col(0) = y;
    b.rightCols(x.cols()) = x;
    const Mat s = solve(b);
    return profile_from_solves(log_det_, y, x, s.col(0), s.rightCols(x.cols()));
  }

  /// Kriging at test sites whose basis rows come from `rows(lo, hi)` (dense,
  /// (hi - lo) x K) with independent variance `d0` and trend rows `x0`:
  ///   mean = x0'b + h0' M^{-1} H' D^{-1} (y - Xb)
  ///   var  = h0' M^{-1} h0 + d0 + u' beta_cov u,  u = x0 - X' D^{-1} H M^{-1} h0
  template <typename Rows>
  void predict(Rows&& rows, const Vec& d0, const Mat& x0, const Vec& beta, const Mat& beta_cov, const Vec& y,
               const Mat& x, PredictionResult& out, int workers = 1) const {
    const std::size_t n = static_cast<std::size_t>(d0.size());
    out.resize(n);
    const Vec r = dinv_.asDiagonal() * (y - x * beta);
    const Vec a = factor_.solve(Mat(h_.transpose() * r));
    const Mat dx = dinv_.asDiagonal() * x;
    const Mat gt = factor_.half_solve(Mat(h_.transpose() * dx));
    const std::size_t chunk = 256;
    parallel_for((n + chunk - 1) / chunk, workers, [&](std::size_t c) {
      const std::size_t lo = c * chunk, hi = std::min(n, lo + chunk);
      const Mat h0 = rows(lo, hi);
      const Mat z = factor_.half_solve(Mat(h0.transpose()));
      const Mat u = x0.middleRows(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(hi - lo)).transpose() -
                    gt.transpose() * z;
      for (std::size_t k = 0; k < hi - lo; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        const auto i = static_cast<Eigen::Index>(lo + k);
        out.mean(i) = x0.row(i).dot(beta) + h0.row(kk).dot(a);
        const double var = z.col(kk).squaredNorm() + d0(i) + u.col(kk).dot(beta_cov * u.col(kk));
        out.se(i) = std::sqrt(std::max(var, 0.0));
      }
    });
    out.set_gaussian_intervals();
  }

 private:
  template <typename A, typename PMat>
  void build(const A& hdh, const PMat& precision) {
    if constexpr (std::is_same_v<Factor, numerics::DenseCholesky>) {
      factor_ = Factor(Mat(detail::to_dense(precision) + detail::to_dense(hdh)));
    } else {
      factor_ = Factor(SparseMatrix(detail::to_sparse(precision) + detail::to_sparse(hdh)));
    }
  }

  HMat h_;
  Vec d_, dinv_;
  Factor factor_;
  double log_det_ = 0.0;
};

using DenseLowRank = LowRankSystem<Mat, numerics::DenseCholesky>;
using SparseLowRank = LowRankSystem<SparseMatrix, numerics::SparseCholesky>;
using SparseBasisDenseFactor = LowRankSystem<SparseMatrix, numerics::DenseCholesky>;

}  // namespace bigspatial::basis
