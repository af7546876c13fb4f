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
#include <complex>
#include <cstddef>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace bigspatial {

using Complex = std::complex<double>;

/// Row-major m1 x m2 grid of complex values.
struct ComplexGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Complex> data;

  ComplexGrid() = default;
  ComplexGrid(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

  Complex& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::size_t size() const { return data.size(); }
};

namespace numerics {

/// Unitary 2-D DFT: J(w) = (m1 m2)^{-1/2} sum_s Y(s) exp(-i w's). The inverse
/// uses the same scale with the opposite sign. Sizes are arbitrary (mixed radix).
inline ComplexGrid dft2(const ComplexGrid& grid, bool inverse) {
  ComplexGrid out(grid.rows, grid.cols);
  if (grid.size() == 0) return out;
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);

  std::vector<Complex> in_buf, out_buf;
  in_buf.resize(grid.cols);
  for (std::size_t r = 0; r < grid.rows; ++r) {
    std::copy_n(grid.data.begin() + static_cast<std::ptrdiff_t>(r * grid.cols), grid.cols, in_buf.begin());
    if (inverse)
      fft.inv(out_buf, in_buf);
    else
      fft.fwd(out_buf, in_buf);
    std::copy(out_buf.begin(), out_buf.end(), out.data.begin() + static_cast<std::ptrdiff_t>(r * grid.cols));
  }
  in_buf.resize(grid.rows);
  for (std::size_t c = 0; c < grid.cols; ++c) {
    for (std::size_t r = 0; r < grid.rows; ++r) in_buf[r] = out(r, c);
    if (inverse)
      fft.inv(out_buf, in_buf);
    else
      fft.fwd(out_buf, in_buf);
    for (std::size_t r = 0; r < grid.rows; ++r) out(r, c) = out_buf[r];
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(grid.rows * grid.cols));
  for (auto& v : out.data) v *= scale;
  return out;
}

}  // namespace numerics
}  // namespace bigspatial
