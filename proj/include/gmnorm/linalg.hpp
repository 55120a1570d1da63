#pragma once

#include <Eigen/SVD>
#include <algorithm>

#include "gmnorm/errors.hpp"
#include "gmnorm/matrix.hpp"

namespace gmnorm {

// Relative threshold under which a singular value counts as zero:
// sigma_i is nonzero iff sigma_i > kRankTolerance * sigma_max * max(rows, cols).
inline constexpr double kRankTolerance = 1e-10;

struct SvdFactors {
  Matrix u;      // rows x rows, orthogonal
  Vector sigma;  // min(rows, cols), nonincreasing, nonnegative
  Matrix vt;     // cols x cols, orthogonal
};

inline SvdFactors svd(const Matrix& m) {
  require_finite(m, "svd");
  Eigen::JacobiSVD<Matrix> dec(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return SvdFactors{dec.matrixU(), dec.singularValues(),
                    dec.matrixV().transpose()};
}

inline Index rank_from_singular_values(const Vector& sigma, Index rows,
                                       Index cols,
                                       double tol = kRankTolerance) {
  if (sigma.size() == 0) return 0;
  const double cutoff =
      tol * sigma[0] * static_cast<double>(std::max(rows, cols));
  Index r = 0;
  while (r < sigma.size() && sigma[r] > cutoff) ++r;
  return r;
}

inline Index numerical_rank(const Matrix& m, double tol = kRankTolerance) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> dec(m);
  return rank_from_singular_values(dec.singularValues(), m.rows(), m.cols(),
                                   tol);
}

// Moore-Penrose pseudoinverse through the SVD. Singular values at or below
// tol * sigma_max are truncated; the zero matrix maps to the zero matrix.
inline Matrix pseudoinverse_from_svd(const SvdFactors& f, Index rows,
                                     Index cols, double tol) {
  const Index k = std::min(rows, cols);
  const double cutoff = f.sigma.size() > 0 ? tol * f.sigma[0] : 0.0;
  Matrix result = Matrix::Zero(cols, rows);
  for (Index i = 0; i < k; ++i) {
    if (f.sigma[i] > cutoff && f.sigma[i] > 0.0)
      result += (1.0 / f.sigma[i]) * f.vt.row(i).transpose() * f.u.col(i).transpose();
  }
  return result;
}

inline Matrix pseudoinverse(const Matrix& m, double tol) {
  if (tol < 0.0) throw invalid_input("pseudoinverse: tol must be >= 0");
  return pseudoinverse_from_svd(svd(m), m.rows(), m.cols(), tol);
}

// Default truncation follows the numerical-rank convention above.
inline Matrix pseudoinverse(const Matrix& m) {
  return pseudoinverse(
      m, kRankTolerance * static_cast<double>(std::max(m.rows(), m.cols())));
}

// Relation between Ker(B) and Ker(A): every generalized norm computation is
// gated on it. Escapes means some kernel direction of B survives A, which
// makes the p->q;B norm infinite.
struct KernelRelation {
  enum class Tag { Contained, Escapes };
  Tag tag;
  Index rank_b;
};

inline KernelRelation kernel_relation(const Matrix& a, const Matrix& b,
                                      double tol = kRankTolerance) {
  if (a.cols() != b.cols())
    throw invalid_input("kernel_relation: A and B must have equal column counts");
  require_finite(a, "kernel_relation");
  const SvdFactors f = svd(b);
  const Index r = rank_from_singular_values(f.sigma, b.rows(), b.cols(), tol);
  const double a_scale = tol * (1.0 + a.norm());
  for (Index i = r; i < b.cols(); ++i) {
    // Rows r.. of vt span Ker(B).
    if ((a * f.vt.row(i).transpose()).norm() > a_scale)
      return {KernelRelation::Tag::Escapes, r};
  }
  return {KernelRelation::Tag::Contained, r};
}

}  // namespace gmnorm
