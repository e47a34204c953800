// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#include "subalign/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "subalign/errors.hpp"

namespace subalign {
namespace {

void check_pair(const SubspaceBasis& source, const SubspaceBasis& target, const char* op) {
  if (source.ambient_dim() != target.ambient_dim() || source.dim() != target.dim()) {
    throw ParameterError(std::string(op) + ": source basis is " +
                         std::to_string(source.ambient_dim()) + "x" +
                         std::to_string(source.dim()) + " but target basis is " +
                         std::to_string(target.ambient_dim()) + "x" +
                         std::to_string(target.dim()));
  }
}

void check_phi(const SubspaceBasis& target, const AlignmentMatrix& phi, const char* op) {
  if (phi.phi.rows() != target.dim() || phi.phi.cols() != target.dim()) {
    throw ParameterError(std::string(op) + ": phi must be " + std::to_string(target.dim()) +
                         "x" + std::to_string(target.dim()));
  }
}

}  // namespace

Index default_subspace_dim(Index ambient_dim, Index samples) {
  if (ambient_dim == 2048) return std::min<Index>(800, std::max<Index>(1, samples - 1));
  const Index d = std::min<Index>(static_cast<Index>(0.4 * static_cast<double>(ambient_dim)),
                                  samples - 1);
  return std::max<Index>(1, d);
}

SubspaceBasis fit_subspace(const Matrix& z, Index d, bool center) {
  const Index n = z.rows();
  const Index dim = z.cols();
  if (n < 2) throw ParameterError("fit_subspace: need at least 2 rows");
  // Centering removes one degree of freedom from the rows.
  const Index max_d = std::min(center ? n - 1 : n, dim);
  if (d < 1 || d > max_d) {
    throw ParameterError("fit_subspace: subspace dim " + std::to_string(d) + " outside [1, " +
                         std::to_string(max_d) + "]");
  }

  SubspaceBasis out;
  out.centered = center;
  out.mean = center ? RowVector(z.colwise().mean()) : RowVector::Zero(dim);
  const Matrix centered = z.rowwise() - out.mean;
  const Svd svd = thin_svd(centered);
  const Index rank = numerical_rank(svd.s, n, dim);
  if (d > rank) {
    throw ParameterError("fit_subspace: subspace dim " + std::to_string(d) +
                         " exceeds numerical rank " + std::to_string(rank));
  }
  out.basis = svd.v.leftCols(d);
  return out;
}

AlignmentMatrix closed_form_phi(const SubspaceBasis& source, const SubspaceBasis& target) {
  check_pair(source, target, "closed_form_phi");
  return {target.basis.transpose() * source.basis};
}

double alignment_cost(const SubspaceBasis& source, const SubspaceBasis& target,
                      const AlignmentMatrix& phi) {
  check_pair(source, target, "alignment_cost");
  check_phi(target, phi, "alignment_cost");
  return (target.basis * phi.phi - source.basis).squaredNorm();
}

Matrix alignment_cost_gradient(const SubspaceBasis& source, const SubspaceBasis& target,
                               const AlignmentMatrix& phi) {
  check_pair(source, target, "alignment_cost_gradient");
  check_phi(target, phi, "alignment_cost_gradient");
  return 2.0 * target.basis.transpose() * (target.basis * phi.phi - source.basis);
}

Matrix aligned_target_basis(const SubspaceBasis& target, const AlignmentMatrix& phi) {
  check_phi(target, phi, "aligned_target_basis");
  return target.basis * phi.phi;
}

Matrix reproject(const Matrix& target_features, const SubspaceBasis& target,
                 const AlignmentMatrix& phi, const SubspaceBasis& source) {
  return reproject(target_features, target, phi, source, source.mean);
}

Matrix reproject(const Matrix& target_features, const SubspaceBasis& target,
                 const AlignmentMatrix& phi, const SubspaceBasis& source,
                 const RowVector& source_anchor) {
  check_pair(source, target, "reproject");
  check_phi(target, phi, "reproject");
  if (target_features.cols() != target.ambient_dim()) {
    throw ParameterError("reproject: features have " + std::to_string(target_features.cols()) +
                         " columns, basis expects " + std::to_string(target.ambient_dim()));
  }
  if (source_anchor.size() != source.ambient_dim()) {
    throw ParameterError("reproject: anchor length does not match the ambient dimension");
  }
  const Matrix coords = (target_features.rowwise() - target.mean) * target.basis;
  Matrix out = coords * phi.phi * source.basis.transpose();
  out.rowwise() += source_anchor;
  return out;
}

Vector principal_angles(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ParameterError("principal_angles: ambient dims differ");
  const Svd svd = thin_svd(a.transpose() * b);
  Vector angles(svd.s.size());
  for (Index i = 0; i < svd.s.size(); ++i) {
    angles(i) = std::acos(std::clamp(svd.s(i), -1.0, 1.0));
  }
  return angles;
}

AlignmentDiagnostics diagnose(const AlignmentMatrix& phi) {
  AlignmentDiagnostics out;
  const Svd svd = thin_svd(phi.phi);
  out.singular_values = svd.s;
  out.rank = numerical_rank(svd.s, phi.phi.rows(), phi.phi.cols());
  const double smin = svd.s(svd.s.size() - 1);
  out.condition_number =
      smin > 0.0 ? svd.s(0) / smin : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace subalign
