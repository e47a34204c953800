// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#include "subalign/core.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "subalign/errors.hpp"

namespace subalign {

const char* to_string(FormatErrorKind kind) {
  switch (kind) {
    case FormatErrorKind::bad_magic: return "bad magic";
    case FormatErrorKind::version_mismatch: return "version mismatch";
    case FormatErrorKind::truncated: return "truncated";
    case FormatErrorKind::shape_overflow: return "shape overflow";
    case FormatErrorKind::checksum_mismatch: return "checksum mismatch";
    case FormatErrorKind::non_finite: return "non-finite value";
    case FormatErrorKind::malformed: return "malformed";
  }
  return "unknown";
}

Svd thin_svd(const Matrix& m) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw ParameterError("thin_svd: matrix must have at least one row and one column");
  }
  if (!all_finite(m)) {
    throw NumericalError("thin_svd: input contains non-finite values", 0);
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    // The backend does not report how far it got.
    throw NumericalError("thin_svd: decomposition did not converge for a " +
                             std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                             " matrix",
                         -1);
  }

  Svd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (Index j = 0; j < out.v.cols(); ++j) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < out.v.rows(); ++i) {
      const double a = std::abs(out.v(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (out.v(arg, j) < 0.0) {
      out.v.col(j) *= -1.0;
      out.u.col(j) *= -1.0;
    }
  }
  return out;
}

Index numerical_rank(const Vector& singular_values, Index rows, Index cols) {
  if (singular_values.size() == 0) return 0;
  const double tol = static_cast<double>(std::max(rows, cols)) *
                     std::numeric_limits<double>::epsilon() * singular_values(0);
  Index rank = 0;
  for (Index i = 0; i < singular_values.size(); ++i) {
    if (singular_values(i) > tol) ++rank;
  }
  return rank;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - mx).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

double frobenius_norm(const Matrix& m) { return m.norm(); }

bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) {
    throw NumericalError(std::string(what) + " contains non-finite values");
  }
}

Labels argmax_rows(const Matrix& m) {
  Labels out(static_cast<std::size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < m.cols(); ++j) {
      if (m(i, j) > m(i, best)) best = j;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Index>(i)) = m.row(rows[i]);
  }
  return out;
}

Labels gather(std::span<const int> labels, std::span<const Index> rows) {
  Labels out;
  out.reserve(rows.size());
  for (Index r : rows) out.push_back(labels[static_cast<std::size_t>(r)]);
  return out;
}

}  // namespace subalign
