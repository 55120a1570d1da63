#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "gmnorm/convex/newton.hpp"
#include "gmnorm/convex/status.hpp"
#include "gmnorm/linalg.hpp"
#include "gmnorm/norms.hpp"

namespace gmnorm::convex {

// min ||beta||_r  subject to  M beta = c.
struct EqualityNormProblem {
  Matrix m;
  Vector c;
  Exponent r;
};

struct MinNormSolution {
  double value = std::numeric_limits<double>::infinity();
  Vector beta;
  // Equality multiplier: approximately M^T y = grad ||beta||_r. It doubles as
  // the dual certificate (c^T y / ||M^T y||_{r*} lower-bounds the optimum) and
  // as the primal witness of the outer norm problems.
  Vector multiplier;
  SolveStatus status{SolveTag::Infeasible, 0.0};
};

namespace detail {

// y = (M^+)^T g from the cached SVD of M.
inline Vector multiplier_from_gradient(const SvdFactors& f, Index rank,
                                       const Vector& g) {
  Vector y = Vector::Zero(f.u.rows());
  for (Index i = 0; i < rank; ++i)
    y += (f.vt.row(i) * g)(0) / f.sigma[i] * f.u.col(i);
  return y;
}

// Gradient of ||.||_r at beta (any subgradient works for certification).
inline Vector norm_gradient(const Vector& beta, Exponent r, double value) {
  Vector g = Vector::Zero(beta.size());
  if (value <= 0.0) return g;
  if (r.is_one()) {
    for (Index i = 0; i < beta.size(); ++i)
      g[i] = beta[i] > 0.0 ? 1.0 : (beta[i] < 0.0 ? -1.0 : 0.0);
  } else if (r.is_inf()) {
    Index top;
    beta.cwiseAbs().maxCoeff(&top);
    g[top] = beta[top] >= 0.0 ? 1.0 : -1.0;
  } else {
    for (Index i = 0; i < beta.size(); ++i) {
      const double t = std::abs(beta[i]) / value;
      g[i] = std::copysign(std::pow(t, r.value() - 1.0), beta[i]);
    }
  }
  return g;
}

// Certified relative gap from the dual candidate y: by weak duality
// c^T y / ||M^T y||_{r*} never exceeds the optimum.
inline double certified_gap(const Matrix& m, const Vector& c, Exponent r,
                            double value, const Vector& y) {
  if (value <= 0.0) return 0.0;
  const Vector mty = m.transpose() * y;
  const double denom = vector_norm(mty, holder_conjugate(r));
  double lb = 0.0;
  if (denom > 0.0) lb = c.dot(y) / denom;
  return std::max(0.0, value - lb) / std::max(1.0, value);
}

struct EqualityGeometry {
  SvdFactors f;
  Index rank = 0;
  Vector beta0;    // minimum 2-norm particular solution
  Matrix nullbasis;  // orthonormal columns spanning Ker(M)
  bool consistent = false;
};

inline EqualityGeometry equality_geometry(const Matrix& m, const Vector& c) {
  EqualityGeometry geo;
  geo.f = svd(m);
  geo.rank = rank_from_singular_values(geo.f.sigma, m.rows(), m.cols());
  geo.beta0 = Vector::Zero(m.cols());
  for (Index i = 0; i < geo.rank; ++i)
    geo.beta0 += geo.f.u.col(i).dot(c) / geo.f.sigma[i] *
                 geo.f.vt.row(i).transpose();
  const double resid = (m * geo.beta0 - c).norm();
  geo.consistent = resid <= 1e-8 * (1.0 + c.norm() + m.norm());
  const Index d = m.cols() - geo.rank;
  geo.nullbasis = geo.f.vt.bottomRows(d).transpose();
  return geo;
}

// Smoothed-power continuation for r in (1, inf): Newton on
// sum_i (beta_i^2 + eps^2)^(r/2) over the null-space coordinates, with eps
// driven down geometrically.
inline Vector smooth_r_minimize(const EqualityGeometry& geo, double r,
                                double scale, bool* converged) {
  const Matrix& nb = geo.nullbasis;
  Vector z = Vector::Zero(nb.cols());
  *converged = true;
  for (double eps = 1e-2 * scale; eps >= 0.9e-12 * scale; eps *= 1e-2) {
    auto objective = [&](const Vector& zz, double& value, Vector* grad,
                         Matrix* hess) -> bool {
      const Vector beta = geo.beta0 + nb * zz;
      value = 0.0;
      Vector phi1;
      Vector phi2;
      if (grad) phi1.setZero(beta.size());
      if (hess) phi2.setZero(beta.size());
      for (Index i = 0; i < beta.size(); ++i) {
        const double s = beta[i] * beta[i] + eps * eps;
        value += std::pow(s, 0.5 * r);
        if (grad) phi1[i] = r * beta[i] * std::pow(s, 0.5 * r - 1.0);
        if (hess)
          phi2[i] = r * std::pow(s, 0.5 * r - 2.0) *
                    ((r - 1.0) * beta[i] * beta[i] + eps * eps);
      }
      if (grad) *grad = nb.transpose() * phi1;
      if (hess) *hess = nb.transpose() * phi2.asDiagonal() * nb;
      return std::isfinite(value);
    };
    NewtonOptions opt;
    double f0;
    objective(z, f0, nullptr, nullptr);
    opt.decrement_tol = 1e-15 * (1.0 + f0);
    NewtonResult nr = newton_minimize(objective, z, opt);
    z = nr.x;
    if (!nr.converged) *converged = false;
  }
  return z;
}

// Log-barrier path for r = 1 and r = inf: both are linear programs after the
// usual absolute-value epigraph split.
inline Vector lp_norm_minimize(const EqualityGeometry& geo, bool is_inf,
                               double tol, bool* converged, Vector* dual_g) {
  const Matrix& nb = geo.nullbasis;
  const Index l = geo.beta0.size();
  const Index d = nb.cols();
  const Index extras = is_inf ? 1 : l;

  Vector x0(d + extras);
  x0.head(d).setZero();
  if (is_inf)
    x0[d] = geo.beta0.cwiseAbs().maxCoeff() + 1.0;
  else
    x0.tail(l) = geo.beta0.cwiseAbs().array() + 1.0;

  auto beta_of = [&](const Vector& x) -> Vector {
    return geo.beta0 + nb * x.head(d);
  };

  auto f0 = [&](const Vector& x, double& value, Vector* grad,
                Matrix* hess) -> bool {
    value = is_inf ? x[d] : x.tail(l).sum();
    if (grad) {
      grad->setZero(x.size());
      if (is_inf)
        (*grad)[d] = 1.0;
      else
        grad->tail(l).setConstant(1.0);
    }
    if (hess) hess->setZero(x.size(), x.size());
    return true;
  };

  auto barrier = [&](const Vector& x, double& value, Vector* grad,
                     Matrix* hess) -> bool {
    const Vector beta = beta_of(x);
    value = 0.0;
    if (grad) grad->setZero(x.size());
    if (hess) hess->setZero(x.size(), x.size());
    for (Index i = 0; i < l; ++i) {
      const double ti = is_inf ? x[d] : x[d + i];
      const double sp = ti - beta[i];
      const double sm = ti + beta[i];
      if (sp <= 0.0 || sm <= 0.0) return false;
      value -= std::log(sp) + std::log(sm);
      if (!grad && !hess) continue;
      const Index ei = is_inf ? d : d + i;
      const Vector ni = nb.row(i).transpose();
      if (grad) {
        grad->head(d) += (1.0 / sp - 1.0 / sm) * ni;
        (*grad)[ei] += -1.0 / sp - 1.0 / sm;
      }
      if (hess) {
        const double qp = 1.0 / (sp * sp);
        const double qm = 1.0 / (sm * sm);
        hess->topLeftCorner(d, d) += (qp + qm) * ni * ni.transpose();
        hess->col(ei).head(d) += (-qp + qm) * ni;
        hess->row(ei).head(d) += ((-qp + qm) * ni).transpose();
        (*hess)(ei, ei) += qp + qm;
      }
    }
    return true;
  };

  BarrierOptions opt;
  opt.gap_rel_tol = std::min(tol, 1e-9);
  BarrierResult br =
      barrier_minimize(f0, barrier, 2.0 * static_cast<double>(l), x0, opt);
  *converged = br.converged;

  // Normalized barrier multipliers give an exactly dual-feasible subgradient.
  const Vector beta = beta_of(br.x);
  dual_g->setZero(l);
  if (is_inf) {
    double total = 0.0;
    Vector g(l);
    for (Index i = 0; i < l; ++i) {
      const double lp = 1.0 / (br.x[d] - beta[i]);
      const double lm = 1.0 / (br.x[d] + beta[i]);
      g[i] = lp - lm;
      total += lp + lm;
    }
    if (total > 0.0) *dual_g = g / total;
  } else {
    for (Index i = 0; i < l; ++i) {
      const double lp = 1.0 / (br.x[d + i] - beta[i]);
      const double lm = 1.0 / (br.x[d + i] + beta[i]);
      (*dual_g)[i] = (lp - lm) / (lp + lm);
    }
  }
  return br.x.head(d);
}

}  // namespace detail

inline MinNormSolution min_norm_under_equality(const EqualityNormProblem& prob,
                                               double tol = 1e-8) {
  const Matrix& m = prob.m;
  if (prob.c.size() != m.rows())
    throw invalid_input("min_norm_under_equality: c length must match rows of M");
  require_finite(m, "min_norm_under_equality");
  require_finite(prob.c, "min_norm_under_equality");

  MinNormSolution sol;

  if (prob.c.norm() == 0.0) {
    sol.value = 0.0;
    sol.beta = Vector::Zero(m.cols());
    sol.multiplier = Vector::Zero(m.rows());
    sol.status = {SolveTag::Optimal, 0.0};
    return sol;
  }

  // Work in units of the particular solution so the iterative paths see O(1)
  // numbers regardless of the data scale.
  detail::EqualityGeometry geo = detail::equality_geometry(m, prob.c);
  if (!geo.consistent) {
    sol.status = {SolveTag::Infeasible, 0.0};
    return sol;
  }
  const double unit = std::max(geo.beta0.cwiseAbs().maxCoeff(), 1e-300);
  geo.beta0 /= unit;

  const Index d = geo.nullbasis.cols();
  Vector beta_hat;
  bool converged = true;
  Vector dual_g;  // subgradient candidate produced by the LP paths

  if (d == 0 || prob.r.is_two()) {
    beta_hat = geo.beta0;
  } else if (prob.r.is_one() || prob.r.is_inf()) {
    const Vector z = detail::lp_norm_minimize(geo, prob.r.is_inf(), tol,
                                              &converged, &dual_g);
    beta_hat = geo.beta0 + geo.nullbasis * z;
  } else {
    const Vector z =
        detail::smooth_r_minimize(geo, prob.r.value(), 1.0, &converged);
    beta_hat = geo.beta0 + geo.nullbasis * z;
  }

  sol.beta = unit * beta_hat;
  sol.value = vector_norm(sol.beta, prob.r);

  Vector g = dual_g.size() == sol.beta.size()
                 ? dual_g
                 : detail::norm_gradient(sol.beta, prob.r, sol.value);
  sol.multiplier = detail::multiplier_from_gradient(geo.f, geo.rank, g);
  const double gap =
      detail::certified_gap(m, prob.c, prob.r, sol.value, sol.multiplier);
  sol.status.kkt_residual = gap;
  sol.status.tag = (converged && gap <= std::max(tol, 1e-8))
                       ? SolveTag::Optimal
                       : SolveTag::NumericalFailure;
  return sol;
}

}  // namespace gmnorm::convex
