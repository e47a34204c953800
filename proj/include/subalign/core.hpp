// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#pragma once

#include <Eigen/Dense>

#include <span>
#include <string_view>
#include <vector>

namespace subalign {

/// Dense row-major storage used for every feature matrix and parameter.
/// Rows are samples, columns are feature coordinates.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// Class index per sample.
using Labels = std::vector<int>;

/// Thin singular value decomposition m = u * diag(s) * v^T.
///
/// `u` is rows x r, `v` is cols x r with r = min(rows, cols). Singular values
/// are non-negative and non-increasing. Each pair (u_i, v_i) is sign-fixed so
/// that the largest-magnitude entry of v_i is positive (first index wins a tie),
/// which makes the factors reproducible across runs.
struct Svd {
  Matrix u;
  Vector s;
  Matrix v;
};

/// Throws NumericalError when the backend does not converge or the input is
/// not finite, ParameterError on an empty matrix.
Svd thin_svd(const Matrix& m);

/// Numerical rank: count of singular values above max(rows, cols) * eps * s_max.
Index numerical_rank(const Vector& singular_values, Index rows, Index cols);

/// Row-wise softmax with max subtraction. Rows sum to one.
Matrix softmax_rows(const Matrix& logits);

double frobenius_norm(const Matrix& m);

bool all_finite(const Matrix& m);

/// Throws NumericalError naming `what` when `m` holds NaN or Inf.
void require_finite(const Matrix& m, std::string_view what);

/// Per-row argmax; ties resolve to the lowest column index.
Labels argmax_rows(const Matrix& m);

/// Copies the selected rows of `m` in the given order.
Matrix gather_rows(const Matrix& m, std::span<const Index> rows);

Labels gather(std::span<const int> labels, std::span<const Index> rows);

}  // namespace subalign
