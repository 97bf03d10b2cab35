// Copyright 2026 The ordhash Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ORDHASH_NUMERICS_HPP_
#define ORDHASH_NUMERICS_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace ordhash {

using RealVec = std::vector<double>;

// Dense row-major matrix. A column is addressed as a "latent pattern" by the
// hashing code, so column access is provided alongside the usual (row, col).
class RealMat {
 public:
  RealMat() = default;
  RealMat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const RealMat&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Spatial feature map with M channels over an X (width) by Y (height) grid.
// Storage is channel-major: index = m*X*Y + y*X + x.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::size_t channels, std::size_t width, std::size_t height, double fill = 0.0)
      : m_(channels), x_(width), y_(height), data_(channels * width * height, fill) {}

  std::size_t channels() const noexcept { return m_; }
  std::size_t width() const noexcept { return x_; }
  std::size_t height() const noexcept { return y_; }
  std::size_t locations() const noexcept { return x_ * y_; }

  double& at(std::size_t m, std::size_t y, std::size_t x) { return data_[(m * y_ + y) * x_ + x]; }
  double at(std::size_t m, std::size_t y, std::size_t x) const { return data_[(m * y_ + y) * x_ + x]; }

  // Flattened location index loc = y*X + x.
  double& at(std::size_t m, std::size_t loc) { return data_[m * x_ * y_ + loc]; }
  double at(std::size_t m, std::size_t loc) const { return data_[m * x_ * y_ + loc]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const FeatureMap&) const = default;

 private:
  std::size_t m_ = 0;
  std::size_t x_ = 0;
  std::size_t y_ = 0;
  std::vector<double> data_;
};

// out_k = sum_m W(m, k) * x[m], i.e. W^T x for W of shape M x K.
RealVec Matvec(const RealMat& w, std::span<const double> x);

// Max-shifted softmax. Rejects NaN input.
RealVec SoftmaxStable(std::span<const double> a);

RealVec Hadamard(std::span<const double> a, std::span<const double> b);

// Smallest index attaining the maximum.
std::size_t ArgmaxFirst(std::span<const double> a);

bool AllFinite(std::span<const double> a) noexcept;

}  // namespace ordhash

#endif  // ORDHASH_NUMERICS_HPP_
