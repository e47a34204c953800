// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "../support.hpp"
#include "subalign/errors.hpp"
#include "subalign/subspace.hpp"

using namespace subalign;
using subalign::testing::basis_of;
using subalign::testing::random_orthonormal;

namespace {

Matrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

double orthonormality_error(const Matrix& w) {
  return (w.transpose() * w - Matrix::Identity(w.cols(), w.cols())).norm();
}

}  // namespace

TEST(FitSubspace, AxisAlignedRowsGivePositiveFirstAxis) {
  Matrix z = Matrix::Zero(5, 3);
  z.col(0) << -2, -1, 0.5, 1, 3;
  for (bool center : {true, false}) {
    const SubspaceBasis b = fit_subspace(z, 1, center);
    EXPECT_NEAR((b.basis - column({1, 0, 0})).norm(), 0.0, 1e-12);
    EXPECT_EQ(b.centered, center);
  }
}

TEST(FitSubspace, IdentityRowsSpanEverything) {
  const SubspaceBasis b = fit_subspace(Matrix::Identity(3, 3), 3, false);
  EXPECT_NEAR((b.basis * b.basis.transpose() - Matrix::Identity(3, 3)).norm(), 0.0, 1e-12);
  EXPECT_TRUE(b.mean.isZero());
}

TEST(FitSubspace, RecoversPlantedSubspace) {
  Rng rng(21);
  const Matrix planted = random_orthonormal(20, 5, rng);
  const Matrix z = rng.normal_matrix(200, 5) * planted.transpose() + rng.normal_matrix(200, 20, 1e-6);
  const SubspaceBasis b = fit_subspace(z, 5, true);
  const Vector angles = principal_angles(b.basis, planted);
  EXPECT_LE(angles.maxCoeff(), 1e-4);
}

TEST(FitSubspace, CenteringStoresMean) {
  Rng rng(22);
  Matrix z = rng.normal_matrix(50, 4);
  z.rowwise() += RowVector::Constant(4, 10.0);
  const SubspaceBasis b = fit_subspace(z, 2, true);
  EXPECT_NEAR((b.mean - z.colwise().mean()).norm(), 0.0, 1e-12);
  EXPECT_TRUE(fit_subspace(z, 2, false).mean.isZero());
}

TEST(FitSubspace, VarianceNonIncreasingAndOrthonormal) {
  Rng rng(23);
  Matrix z = rng.normal_matrix(80, 12);
  for (Index j = 0; j < 12; ++j) z.col(j) *= 1.0 + j;
  const SubspaceBasis b = fit_subspace(z, 8, true);
  EXPECT_LE(orthonormality_error(b.basis), 1e-10);
  const Matrix centered = z.rowwise() - b.mean;
  double prev = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < b.dim(); ++j) {
    const double var = (centered * b.basis.col(j)).squaredNorm();
    EXPECT_LE(var, prev * (1 + 1e-12));
    prev = var;
  }
}

TEST(FitSubspace, RejectsBadDimensions) {
  Rng rng(24);
  const Matrix z = rng.normal_matrix(6, 4);
  EXPECT_THROW(fit_subspace(z, 0, true), ParameterError);
  EXPECT_THROW(fit_subspace(z, 5, true), ParameterError);
  EXPECT_THROW(fit_subspace(rng.normal_matrix(3, 5), 3, true), ParameterError);
  EXPECT_NO_THROW(fit_subspace(rng.normal_matrix(3, 5), 3, false));
  EXPECT_THROW(fit_subspace(rng.normal_matrix(1, 5), 1, false), ParameterError);
}

TEST(FitSubspace, RejectsDimensionAboveNumericalRank) {
  Rng rng(25);
  const Matrix z = rng.normal_matrix(30, 2) * rng.normal_matrix(2, 6);
  EXPECT_NO_THROW(fit_subspace(z, 2, false));
  EXPECT_THROW(fit_subspace(z, 3, false), ParameterError);
}

TEST(DefaultSubspaceDim, Rules) {
  EXPECT_EQ(default_subspace_dim(2048, 5000), 800);
  EXPECT_EQ(default_subspace_dim(50, 1000), 20);
  EXPECT_EQ(default_subspace_dim(50, 10), 9);
  EXPECT_EQ(default_subspace_dim(2, 100), 1);
}

TEST(ClosedFormPhi, IdenticalSubspacesGiveIdentity) {
  Rng rng(31);
  const SubspaceBasis w = basis_of(random_orthonormal(10, 4, rng));
  EXPECT_NEAR((closed_form_phi(w, w).phi - Matrix::Identity(4, 4)).norm(), 0.0, 1e-12);
}

TEST(ClosedFormPhi, OrthogonalSubspacesGiveZero) {
  const SubspaceBasis ws = basis_of(column({1, 0}));
  const SubspaceBasis wt = basis_of(column({0, 1}));
  const AlignmentMatrix phi = closed_form_phi(ws, wt);
  EXPECT_EQ(phi.phi(0, 0), 0.0);
  EXPECT_NEAR(alignment_cost(ws, wt, AlignmentMatrix{Matrix::Zero(1, 1)}), 1.0, 1e-15);
}

TEST(ClosedFormPhi, SixtyDegreeCaseMatchesGridSearch) {
  const double a = std::numbers::pi / 3.0;
  const SubspaceBasis ws = basis_of(column({1, 0}));
  const SubspaceBasis wt = basis_of(column({std::cos(a), std::sin(a)}));
  const AlignmentMatrix phi = closed_form_phi(ws, wt);
  EXPECT_NEAR(phi.phi(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(alignment_cost(ws, wt, phi), 0.75, 1e-15);

  double best_x = 0.0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int i = -2000; i <= 2000; ++i) {
    const double x = i * 1e-3;
    const double c = std::pow(x * std::cos(a) - 1.0, 2) + std::pow(x * std::sin(a), 2);
    if (c < best_cost) {
      best_cost = c;
      best_x = x;
    }
  }
  EXPECT_NEAR(best_x, phi.phi(0, 0), 1e-3);
  EXPECT_NEAR(best_cost, 0.75, 1e-6);
}

TEST(ClosedFormPhi, DimensionMismatchThrows) {
  Rng rng(32);
  const SubspaceBasis a = basis_of(random_orthonormal(6, 2, rng));
  const SubspaceBasis b = basis_of(random_orthonormal(6, 3, rng));
  const SubspaceBasis c = basis_of(random_orthonormal(7, 2, rng));
  EXPECT_THROW(closed_form_phi(a, b), ParameterError);
  EXPECT_THROW(closed_form_phi(a, c), ParameterError);
  EXPECT_THROW(alignment_cost(a, a, AlignmentMatrix::identity(3)), ParameterError);
}

TEST(AlignmentCost, ZeroForIdenticalBases) {
  Rng rng(33);
  const SubspaceBasis w = basis_of(random_orthonormal(8, 3, rng));
  EXPECT_NEAR(alignment_cost(w, w, AlignmentMatrix::identity(3)), 0.0, 1e-14);
}

TEST(AlignmentCost, GlobalOptimalityProperties) {
  Rng rng(34);
  const Index d = 5;
  for (int trial = 0; trial < 100; ++trial) {
    const SubspaceBasis ws = basis_of(random_orthonormal(20, d, rng));
    const SubspaceBasis wt = basis_of(random_orthonormal(20, d, rng));
    const AlignmentMatrix star = closed_form_phi(ws, wt);
    const double best = alignment_cost(ws, wt, star);
    const double expected = static_cast<double>(d) - (wt.basis.transpose() * ws.basis).squaredNorm();
    ASSERT_NEAR(best, expected, 1e-8);
    ASSERT_GE(best, 0.0);
    for (int p = 0; p < 50; ++p) {
      const AlignmentMatrix nudged{star.phi + 1e-3 * rng.normal_matrix(d, d)};
      ASSERT_LE(best, alignment_cost(ws, wt, nudged));
    }
    EXPECT_LE(alignment_cost_gradient(ws, wt, star).norm(), 1e-12);
  }
}

TEST(AlignedTargetBasis, Cases) {
  Rng rng(35);
  const SubspaceBasis ws = basis_of(random_orthonormal(9, 3, rng));
  const SubspaceBasis wt = basis_of(random_orthonormal(9, 3, rng));
  EXPECT_EQ(aligned_target_basis(wt, AlignmentMatrix::identity(3)), wt.basis);
  EXPECT_TRUE(aligned_target_basis(wt, AlignmentMatrix{Matrix::Zero(3, 3)}).isZero());
  const Matrix expect = wt.basis * wt.basis.transpose() * ws.basis;
  EXPECT_NEAR((aligned_target_basis(wt, closed_form_phi(ws, wt)) - expect).norm(), 0.0, 1e-13);
}

TEST(Reproject, IdentityIsOrthogonalProjection) {
  const SubspaceBasis w = basis_of(column({1, 0}));
  Matrix z(1, 2);
  z << 3, 4;
  const Matrix out = reproject(z, w, AlignmentMatrix::identity(1), w);
  EXPECT_DOUBLE_EQ(out(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(out(0, 1), 0.0);
}

TEST(Reproject, IdentityFixpointOnRandomData) {
  Rng rng(36);
  const Matrix z = rng.normal_matrix(40, 7);
  const SubspaceBasis w = fit_subspace(z, 3, true);
  const Matrix out = reproject(z, w, closed_form_phi(w, w), w);
  const Matrix proj = ((z.rowwise() - w.mean) * w.basis * w.basis.transpose()).rowwise() + w.mean;
  EXPECT_NEAR((out - proj).norm(), 0.0, 1e-12);
}

TEST(Reproject, ZeroPhiGivesSourceMean) {
  Rng rng(37);
  const SubspaceBasis ws = fit_subspace(rng.normal_matrix(20, 4) * 3.0, 2, true);
  const SubspaceBasis wt = fit_subspace(rng.normal_matrix(20, 4), 2, true);
  const Matrix z = rng.normal_matrix(5, 4);
  const Matrix out = reproject(z, wt, AlignmentMatrix{Matrix::Zero(2, 2)}, ws);
  for (Index i = 0; i < out.rows(); ++i) EXPECT_NEAR((out.row(i) - ws.mean).norm(), 0.0, 1e-15);
  const SubspaceBasis us = basis_of(ws.basis);
  const SubspaceBasis ut = basis_of(wt.basis);
  EXPECT_TRUE(reproject(z, ut, AlignmentMatrix{Matrix::Zero(2, 2)}, us).isZero());
}

TEST(Reproject, RotatedCaseByHand) {
  const double a = std::numbers::pi / 3.0;
  const SubspaceBasis ws = basis_of(column({1, 0}));
  const SubspaceBasis wt = basis_of(column({std::cos(a), std::sin(a)}));
  Matrix z(2, 2);
  z << 1.5, -2.0, 0.25, 4.0;
  const Matrix out = reproject(z, wt, closed_form_phi(ws, wt), ws);
  for (Index i = 0; i < 2; ++i) {
    // z . wt is a scalar, times phi = cos a, onto ws = e1.
    const double coord = z(i, 0) * std::cos(a) + z(i, 1) * std::sin(a);
    EXPECT_NEAR(out(i, 0), coord * std::cos(a), 1e-14);
    EXPECT_NEAR(out(i, 1), 0.0, 1e-15);
  }
}

TEST(Reproject, CustomAnchorReplacesSourceMean) {
  Rng rng(38);
  const SubspaceBasis ws = fit_subspace(rng.normal_matrix(20, 4), 2, true);
  const SubspaceBasis wt = fit_subspace(rng.normal_matrix(20, 4), 2, true);
  const Matrix z = rng.normal_matrix(3, 4);
  const RowVector anchor = RowVector::LinSpaced(4, 1.0, 4.0);
  const AlignmentMatrix phi = closed_form_phi(ws, wt);
  const Matrix a = reproject(z, wt, phi, ws);
  const Matrix b = reproject(z, wt, phi, ws, anchor);
  const Matrix expected_shift = (anchor - ws.mean).replicate(3, 1);
  EXPECT_NEAR((b - a - expected_shift).norm(), 0.0, 1e-12);
  EXPECT_THROW(reproject(z, wt, phi, ws, RowVector::Zero(3)), ParameterError);
  EXPECT_THROW(reproject(rng.normal_matrix(3, 5), wt, phi, ws), ParameterError);
}

TEST(PrincipalAngles, KnownAngle) {
  const double a = 0.3;
  const Vector angles = principal_angles(column({1, 0}), column({std::cos(a), std::sin(a)}));
  EXPECT_NEAR(angles(0), a, 1e-12);
}

TEST(Diagnose, RankAndCondition) {
  Matrix m = Matrix::Zero(3, 3);
  m.diagonal() << 4, 2, 0.5;
  const AlignmentDiagnostics d = diagnose(AlignmentMatrix{m});
  EXPECT_EQ(d.rank, 3);
  EXPECT_NEAR(d.condition_number, 8.0, 1e-12);
  m(2, 2) = 0.0;
  const AlignmentDiagnostics s = diagnose(AlignmentMatrix{m});
  EXPECT_EQ(s.rank, 2);
  EXPECT_TRUE(std::isinf(s.condition_number));
}
