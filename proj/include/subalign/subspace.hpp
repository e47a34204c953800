// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#pragma once

#include "subalign/core.hpp"

namespace subalign {

/// Orthonormal basis of a d-dimensional linear subspace of R^D, together with
/// the mean that was subtracted before fitting it.
struct SubspaceBasis {
  Matrix basis;    ///< D x d, orthonormal columns, ordered by captured variance.
  RowVector mean;  ///< length D; all zeros when fitted without centering.
  bool centered = false;

  Index ambient_dim() const { return basis.rows(); }
  Index dim() const { return basis.cols(); }
};

/// The d x d transform between target and source subspace coordinates.
/// Full rank is reported by `diagnose`, not enforced here.
struct AlignmentMatrix {
  Matrix phi;

  Index dim() const { return phi.rows(); }
  static AlignmentMatrix identity(Index d) { return {Matrix::Identity(d, d)}; }
};

struct AlignmentDiagnostics {
  Index rank = 0;
  double condition_number = 0.0;  ///< s_max / s_min; +inf when singular.
  Vector singular_values;
};

/// Subspace dimension used when the config leaves it unset: 800 for 2048-wide
/// features, otherwise min(floor(0.4 * D), n - 1), and never below 1.
Index default_subspace_dim(Index ambient_dim, Index samples);

/// Top-d right singular vectors of z (or of z minus its column mean when
/// `center` is set). Throws ParameterError when d is outside [1, min(n-1, D)]
/// ([1, min(n, D)] without centering) or exceeds the numerical rank of the
/// (centered) data. Each column's largest-magnitude entry is positive.
SubspaceBasis fit_subspace(const Matrix& z, Index d, bool center);

/// Minimizer of ||W_t phi - W_s||_F^2, i.e. phi = W_t^T W_s.
AlignmentMatrix closed_form_phi(const SubspaceBasis& source, const SubspaceBasis& target);

/// ||W_t phi - W_s||_F^2.
double alignment_cost(const SubspaceBasis& source, const SubspaceBasis& target,
                      const AlignmentMatrix& phi);

/// d/dphi of `alignment_cost`: 2 W_t^T (W_t phi - W_s).
Matrix alignment_cost_gradient(const SubspaceBasis& source, const SubspaceBasis& target,
                               const AlignmentMatrix& phi);

/// Source-aligned target basis W_t phi.
Matrix aligned_target_basis(const SubspaceBasis& target, const AlignmentMatrix& phi);

/// Maps target rows into the source frame: (z - mu_t) W_t phi W_s^T + anchor.
/// Without centering mu_t and the anchor are zero. The anchor defaults to the
/// source mean; partial adaptation substitutes a class-weighted one.
Matrix reproject(const Matrix& target_features, const SubspaceBasis& target,
                 const AlignmentMatrix& phi, const SubspaceBasis& source);
Matrix reproject(const Matrix& target_features, const SubspaceBasis& target,
                 const AlignmentMatrix& phi, const SubspaceBasis& source,
                 const RowVector& source_anchor);

/// Principal angles (radians, ascending) between the column spans of two
/// orthonormal bases of the same ambient space.
Vector principal_angles(const Matrix& a, const Matrix& b);

AlignmentDiagnostics diagnose(const AlignmentMatrix& phi);

}  // namespace subalign
