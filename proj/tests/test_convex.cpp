#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

#include "gmnorm/convex/block_sdp.hpp"
#include "gmnorm/convex/matrix_min_norm.hpp"
#include "gmnorm/convex/min_norm.hpp"
#include "gmnorm/convex/norm_ball.hpp"
#include "test_util.hpp"

using namespace gmnorm;
using namespace gmnorm::convex;

namespace {

Matrix row12() {
  Matrix m(1, 2);
  m << 1, 1;
  return m;
}

}  // namespace

TEST(MinNorm, LeastSquaresClosedForm) {
  const MinNormSolution sol =
      min_norm_under_equality({row12(), Vector::Ones(1), Exponent(2)});
  ASSERT_TRUE(sol.status.ok());
  EXPECT_NEAR(sol.value, 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(sol.beta[0], 0.5, 1e-12);
  EXPECT_NEAR(sol.beta[1], 0.5, 1e-12);
}

TEST(MinNorm, SymmetricInfinityOptimum) {
  const MinNormSolution sol =
      min_norm_under_equality({row12(), Vector::Ones(1), Exponent::inf()});
  ASSERT_TRUE(sol.status.ok());
  EXPECT_NEAR(sol.value, 0.5, 1e-8);
  EXPECT_LE(sol.status.kkt_residual, 1e-8);
}

TEST(MinNorm, OneNormOptimum) {
  const MinNormSolution sol =
      min_norm_under_equality({row12(), Vector::Ones(1), Exponent(1)});
  ASSERT_TRUE(sol.status.ok());
  EXPECT_NEAR(sol.value, 1.0, 1e-8);
}

TEST(MinNorm, InconsistentSystemIsInfeasible) {
  Matrix m(2, 1);
  m << 1, 0;
  Vector c(2);
  c << 0, 1;
  const MinNormSolution sol =
      min_norm_under_equality({m, c, Exponent(2)});
  EXPECT_EQ(sol.status.tag, SolveTag::Infeasible);
  EXPECT_TRUE(std::isinf(sol.value));
}

TEST(MinNorm, ZeroRhsGivesZero) {
  std::mt19937_64 rng(23);
  const Matrix m = testutil::random_matrix(2, 5, rng);
  const MinNormSolution sol =
      min_norm_under_equality({m, Vector::Zero(2), Exponent(3)});
  ASSERT_TRUE(sol.status.ok());
  EXPECT_EQ(sol.value, 0.0);
}

// The iterative smooth path at r = 2 must land on the pseudoinverse closed
// form (the dispatcher itself shortcuts r = 2, so drive the path directly).
TEST(MinNorm, SmoothPathMatchesClosedFormAtTwo) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix m = testutil::random_matrix(2, 4, rng, 5.0);
    const Vector c = testutil::random_vector(2, rng, 5.0);
    detail::EqualityGeometry geo = detail::equality_geometry(m, c);
    if (!geo.consistent) continue;
    const double unit = std::max(geo.beta0.cwiseAbs().maxCoeff(), 1e-300);
    geo.beta0 /= unit;
    bool converged = false;
    const Vector z = detail::smooth_r_minimize(geo, 2.0, 1.0, &converged);
    ASSERT_TRUE(converged);
    const Vector beta = unit * (geo.beta0 + geo.nullbasis * z);
    const Vector closed = pseudoinverse(m) * c;
    EXPECT_LE((beta - closed).norm(), 1e-8 * (1.0 + closed.norm()));
  }
}

TEST(MinNorm, ValueMonotoneInR) {
  std::mt19937_64 rng(31);
  const Exponent grid[] = {Exponent(1), Exponent(1.5), Exponent(2),
                           Exponent(3), Exponent::inf()};
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix m = testutil::random_matrix(2, 4, rng, 3.0);
    const Vector c = testutil::random_vector(2, rng, 3.0);
    double prev = std::numeric_limits<double>::infinity();
    for (const Exponent& r : grid) {
      const MinNormSolution sol = min_norm_under_equality({m, c, r});
      ASSERT_TRUE(sol.status.ok());
      EXPECT_LE(sol.value, prev * (1.0 + 1e-7) + 1e-12);
      prev = sol.value;
    }
  }
}

TEST(MinNorm, CertifiedOnRandomInstances) {
  std::mt19937_64 rng(37);
  for (double r : {1.0, 4.0 / 3.0, 1.5, 3.0, 4.0}) {
    for (int trial = 0; trial < 12; ++trial) {
      const Matrix m = testutil::random_matrix(3, 6, rng, 4.0);
      const Vector c = testutil::random_vector(3, rng, 4.0);
      const MinNormSolution sol = min_norm_under_equality({m, c, Exponent(r)});
      ASSERT_TRUE(sol.status.ok()) << "r=" << r << " trial=" << trial;
      EXPECT_LE(sol.status.kkt_residual, 1e-8);
      EXPECT_LE((m * sol.beta - c).norm(), 1e-8 * (1.0 + c.norm()));
    }
  }
}

TEST(BlockSdp, ScalarClosedForms) {
  // [[v, -1], [-1, w]] >= 0 means v w >= 1; min (v + w)/2 = 1 at v = w = 1.
  Matrix one(1, 1);
  one << 1;
  const BlockSdpSolution sol =
      solve_block_sdp({one, one, Exponent(1), Exponent::inf()});
  ASSERT_TRUE(sol.status.ok());
  EXPECT_NEAR(sol.value, 1.0, 1e-6);
  EXPECT_NEAR(sol.v[0], 1.0, 1e-4);
  EXPECT_NEAR(sol.w[0], 1.0, 1e-4);

  Matrix two(1, 1);
  two << 2;
  const BlockSdpSolution sol2 =
      solve_block_sdp({two, one, Exponent(1), Exponent::inf()});
  ASSERT_TRUE(sol2.status.ok());
  EXPECT_NEAR(sol2.value, 2.0, 1e-6);
}

TEST(BlockSdp, ZeroMatrix) {
  const BlockSdpSolution sol = solve_block_sdp(
      {Matrix::Zero(2, 3), Matrix::Identity(3, 3), Exponent(1), Exponent(2)});
  ASSERT_TRUE(sol.status.ok());
  EXPECT_EQ(sol.value, 0.0);
}

TEST(BlockSdp, SchurStackExample) {
  // A = (1,1)^T, B = [1], v_exp = 1, w_exp = inf: w >= 1/v1 + 1/v2, so the
  // objective (v1 + v2 + w)/2 has minimum 2 at v = (1,1), w = 2.
  Matrix a(2, 1);
  a << 1, 1;
  Matrix b(1, 1);
  b << 1;
  const BlockSdpSolution sol =
      solve_block_sdp({a, b, Exponent(1), Exponent::inf()});
  ASSERT_TRUE(sol.status.ok());
  EXPECT_NEAR(sol.value, 2.0, 1e-6);
}

TEST(BlockSdp, CertificateIsPsdOnRandomInstances) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = testutil::random_matrix(3, 2, rng, 4.0);
    const Matrix b = testutil::random_injective(3, 2, rng, 2.0);
    const Exponent vexp = trial % 2 == 0 ? Exponent(1) : Exponent(3);
    const Exponent wexp = trial % 3 == 0 ? Exponent::inf() : Exponent(2.5);
    const BlockSdpSolution sol = solve_block_sdp({a, b, vexp, wexp});
    ASSERT_TRUE(sol.status.ok()) << "trial " << trial;
    Matrix s(5, 5);
    s.topLeftCorner(3, 3) = Matrix(sol.v.asDiagonal());
    s.topRightCorner(3, 2) = -a;
    s.bottomLeftCorner(2, 3) = -a.transpose();
    s.bottomRightCorner(2, 2) = b.transpose() * sol.w.asDiagonal() * b;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-7 * (1.0 + a.norm()));
  }
}

// Weak-duality sandwich: the scaled inverse of the final barrier matrix is a
// PSD dual candidate whose normalized trace value nearly attains the primal.
TEST(BlockSdp, DualTraceAttainsValue) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    const Index m = 2, n = 2, l = 2;
    const Matrix a = testutil::random_matrix(m, n, rng, 3.0);
    const Matrix b = testutil::random_injective(l, n, rng, 2.0);
    const Exponent vexp = trial % 2 == 0 ? Exponent(1) : Exponent(2);
    const Exponent wexp = trial % 2 == 0 ? Exponent::inf() : Exponent(4);
    const BlockSdpSolution sol = solve_block_sdp({a, b, vexp, wexp});
    ASSERT_TRUE(sol.status.ok());
    ASSERT_EQ(sol.dual_z.rows(), m + n);

    // Normalize the diagonal extractions to be exactly dual feasible.
    const Vector t = sol.dual_z.topLeftCorner(m, m).diagonal();
    const Vector s =
        (b * sol.dual_z.bottomRightCorner(n, n) * b.transpose()).diagonal();
    const double tn = vector_norm(t, holder_conjugate(vexp));
    const double sn = vector_norm(s, holder_conjugate(wexp));
    const double scale = std::max({tn, sn, 1e-300});
    Matrix mtilde = Matrix::Zero(m + n, m + n);
    mtilde.topRightCorner(m, n) = a;
    mtilde.bottomLeftCorner(n, m) = a.transpose();
    const double dual_value =
        0.5 * (mtilde * (sol.dual_z / scale)).trace();
    EXPECT_LE(dual_value, sol.value * (1.0 + 1e-9) + 1e-12);
    EXPECT_GE(dual_value, sol.value - 1e-6 * (1.0 + sol.value));
  }
}

TEST(BlockSdp, KernelEscapeIsInfeasible) {
  Matrix b(1, 2);
  b << 1, 0;
  const BlockSdpSolution sol = solve_block_sdp(
      {Matrix::Identity(2, 2), b, Exponent(1), Exponent::inf()});
  EXPECT_EQ(sol.status.tag, SolveTag::Infeasible);
  EXPECT_TRUE(std::isinf(sol.value));
}

TEST(MatrixMinNorm, ForcedSolutions) {
  const Matrix id = Matrix::Identity(2, 2);
  const LpqSpec spec{Exponent(1), Exponent::inf(), true};

  const MatrixMinNormSolution a =
      min_matrix_norm_under_equality(id, Matrix::Identity(2, 2), spec);
  ASSERT_TRUE(a.status.ok());
  EXPECT_NEAR(a.value, 1.0, 1e-9);

  Matrix ones(2, 2);
  ones.setOnes();
  const MatrixMinNormSolution b =
      min_matrix_norm_under_equality(id, ones, spec);
  ASSERT_TRUE(b.status.ok());
  EXPECT_NEAR(b.value, 2.0, 1e-9);
}

TEST(MatrixMinNorm, InconsistentRowIsInfeasible) {
  Matrix mt(2, 2);
  mt << 1, 0, 0, 0;  // second equation reads 0 = ct_2
  Matrix ct(2, 1);
  ct << 1, 1;
  const MatrixMinNormSolution sol = min_matrix_norm_under_equality(
      mt, ct, {Exponent(1), Exponent::inf(), true});
  EXPECT_EQ(sol.status.tag, SolveTag::Infeasible);
}

// Single-column problems reduce to vector norm minimization: two independent
// code paths that must agree.
TEST(MatrixMinNorm, SingleColumnMatchesVectorPath) {
  std::mt19937_64 rng(47);
  const Exponent exps[] = {Exponent(1), Exponent(1.5), Exponent(2),
                           Exponent(3), Exponent::inf()};
  for (const Exponent& p : exps) {
    for (int trial = 0; trial < 8; ++trial) {
      const Matrix mt = testutil::random_matrix(2, 5, rng, 3.0);
      const Matrix ct = testutil::random_matrix(2, 1, rng, 3.0);
      const MatrixMinNormSolution ms = min_matrix_norm_under_equality(
          mt, ct, {p, Exponent(2), false});  // one column: outer norm moot
      const MinNormSolution vs =
          min_norm_under_equality({mt, Vector(ct.col(0)), p});
      ASSERT_TRUE(ms.status.ok());
      ASSERT_TRUE(vs.status.ok());
      EXPECT_NEAR(ms.value, vs.value, 1e-6 * (1.0 + vs.value))
          << "p=" << p.value() << " trial=" << trial;
    }
  }
}

TEST(MatrixMinNorm, CertifiedAcrossSpecFamilies) {
  std::mt19937_64 rng(53);
  const LpqSpec specs[] = {
      {Exponent(1), Exponent(1)},          {Exponent(1), Exponent(2)},
      {Exponent(1), Exponent::inf()},      {Exponent(2), Exponent(1)},
      {Exponent(2), Exponent::inf()},      {Exponent::inf(), Exponent(1)},
      {Exponent::inf(), Exponent::inf()},  {Exponent(1), Exponent(3), true},
      {Exponent::inf(), Exponent(2), true},
  };
  for (const auto& spec : specs) {
    const Matrix mt = testutil::random_matrix(2, 4, rng, 2.0);
    const Matrix ct = testutil::random_matrix(2, 3, rng, 2.0);
    const MatrixMinNormSolution sol =
        min_matrix_norm_under_equality(mt, ct, spec);
    ASSERT_TRUE(sol.status.ok())
        << "spec " << spec.inner.value() << "," << spec.outer.value()
        << (spec.transposed ? " T" : "");
    EXPECT_LE(sol.status.kkt_residual, 1e-7);
    EXPECT_LE((mt * sol.y - ct).norm(), 1e-7 * (1.0 + ct.norm()));
  }
}

TEST(NormBall, ClosedFormScalar) {
  // max y with ||(y, y)||_2 <= 1: optimum 1/sqrt(2).
  Matrix m(1, 2);
  m << 1, 1;
  Matrix c(1, 1);
  c << 1;
  const NormBallMaxSolution sol =
      max_trace_under_norm_ball(m, c, {Exponent(2), Exponent(2)});
  ASSERT_TRUE(sol.status.ok());
  EXPECT_NEAR(sol.value, 1.0 / std::sqrt(2.0), 1e-7);
}

TEST(NormBall, RequiresFullRowRank) {
  Matrix m(2, 2);
  m << 1, 0, 1, 0;
  EXPECT_THROW(
      max_trace_under_norm_ball(m, Matrix::Identity(2, 2),
                                {Exponent(2), Exponent(2)}),
      not_surjective);
}
