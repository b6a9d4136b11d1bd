//
// Copyright 2026 The dpcore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef DPCORE_MATRIX_H_
#define DPCORE_MATRIX_H_

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpcore/internal/format.h"

namespace dpcore {

// Dense row-major matrix of doubles. Only what the sensitivity and accounting
// code needs: element access, products with vectors, and column norms.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static absl::StatusOr<Matrix> FromRows(
      const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != m.cols_) {
        return absl::InvalidArgumentError(internal::StrCat(
            "ragged matrix: row ", i, " has ", rows[i].size(),
            " entries, expected ", m.cols_));
      }
      for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  static Matrix Identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  absl::StatusOr<std::vector<double>> Apply(std::span<const double> v) const {
    if (v.size() != cols_) {
      return absl::InvalidArgumentError(
          internal::StrCat("dimension mismatch: matrix has ", cols_,
                       " columns but vector has ", v.size(), " entries"));
    }
    std::vector<double> out(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) acc += (*this)(i, j) * v[j];
      out[i] = acc;
    }
    return out;
  }

  double ColumnL1Norm(std::size_t j) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) acc += std::fabs((*this)(i, j));
    return acc;
  }

  // Induced L1 operator norm: the largest column L1 norm.
  double L1OperatorNorm() const {
    double best = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) {
      best = std::fmax(best, ColumnL1Norm(j));
    }
    return best;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace dpcore

#endif  // DPCORE_MATRIX_H_
