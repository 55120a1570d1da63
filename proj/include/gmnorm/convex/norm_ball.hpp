#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "gmnorm/convex/matrix_min_norm.hpp"
#include "gmnorm/convex/newton.hpp"
#include "gmnorm/convex/status.hpp"
#include "gmnorm/linalg.hpp"
#include "gmnorm/norms.hpp"

namespace gmnorm::convex {

// max trace(C^T Y)  subject to  lpq_norm(M^T Y, spec) <= 1.
// M must have full row rank so the constraint set is compact.
struct NormBallMaxSolution {
  double value = 0.0;
  Matrix y;
  SolveStatus status{SolveTag::NumericalFailure, 1.0};
};

inline NormBallMaxSolution max_trace_under_norm_ball(const Matrix& m,
                                                     const Matrix& c,
                                                     const LpqSpec& spec,
                                                     double tol = 1e-8) {
  if (m.rows() != c.rows())
    throw invalid_input("max_trace_under_norm_ball: row mismatch");
  require_finite(m, "max_trace_under_norm_ball");
  require_finite(c, "max_trace_under_norm_ball");
  if (numerical_rank(m) < m.rows())
    throw not_surjective("max_trace_under_norm_ball: M must have full row rank");

  const Index ry = m.rows();
  const Index cy = c.cols();

  NormBallMaxSolution sol;
  sol.y = Matrix::Zero(ry, cy);
  if (c.norm() == 0.0) {
    sol.status = {SolveTag::Optimal, 0.0};
    return sol;
  }

  detail::GroupGeometry geom{Matrix::Zero(m.cols(), cy), m.transpose(),
                             detail::group_mode_for(spec),
                             spec.inner.is_inf() ? 1.0 : spec.inner.value()};
  const Index zdim = geom.dim();  // == ry * cy
  const Index groups = geom.num_groups();
  const double pout = spec.outer.value();
  const bool rowwise = spec.transposed;
  const Index outer_count = rowwise ? geom.rows() : geom.cols();
  const bool inner_inf_outer_finite =
      spec.inner.is_inf() && spec.outer.is_finite();
  const Index dim = zdim + (inner_inf_outer_finite ? outer_count : 0);

  auto f0 = [&](const Vector& x, double& value, Vector* grad,
                Matrix* hess) -> bool {
    const Eigen::Map<const Matrix> y(x.data(), ry, cy);
    value = -(c.transpose() * y).trace();
    if (grad) {
      grad->setZero(dim);
      Eigen::Map<Matrix>(grad->data(), ry, cy) = -c;
    }
    if (hess) hess->setZero(dim, dim);
    return true;
  };

  double nu = 0.0;
  SmoothObjective barrier;
  Vector x0 = Vector::Zero(dim);
  const double eps_stages[] = {1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12};
  double eps_live = eps_stages[0];

  if (spec.outer.is_inf()) {
    nu = static_cast<double>(groups);
    barrier = [&geom, &eps_live, groups, zdim, dim](
                  const Vector& x, double& value, Vector* grad,
                  Matrix* hess) -> bool {
      const Eigen::Map<const Matrix> z(x.data(), geom.nb.cols(), geom.cols());
      const auto ev = detail::group_eval(geom, z, eps_live,
                                         grad != nullptr || hess != nullptr);
      value = 0.0;
      Vector slack(groups);
      for (Index g = 0; g < groups; ++g) {
        slack[g] = 1.0 - ev.sigma[g];
        if (slack[g] <= 0.0) return false;
        value -= std::log(slack[g]);
      }
      if (!grad && !hess) return true;
      Matrix entry_w(geom.rows(), geom.cols());
      for (Index j = 0; j < geom.cols(); ++j)
        for (Index i = 0; i < geom.rows(); ++i)
          entry_w(i, j) = 1.0 / slack[geom.group_of(i, j)];
      if (grad) {
        grad->setZero(dim);
        grad->head(zdim) = detail::grad_z_weighted(geom, ev, entry_w);
      }
      if (hess) {
        hess->setZero(dim, dim);
        Matrix entry_coef = entry_w.cwiseProduct(ev.phi2);
        Matrix hz = Matrix::Zero(zdim, zdim);
        detail::add_hess_entry_diag(geom, entry_coef, &hz);
        for (Index g = 0; g < groups; ++g) {
          const Vector gs = detail::grad_z_sigma(geom, ev, g);
          hz += (1.0 / (slack[g] * slack[g])) * gs * gs.transpose();
        }
        hess->topLeftCorner(zdim, zdim) = hz;
      }
      return true;
    };
  } else if (!spec.inner.is_inf()) {
    // One log of the perspective-style sum: sum_g sigma_g^{pout/pin} <= 1.
    nu = 1.0;
    const double cexp = pout / geom.pin;
    barrier = [&geom, &eps_live, groups, zdim, dim, cexp](
                  const Vector& x, double& value, Vector* grad,
                  Matrix* hess) -> bool {
      const Eigen::Map<const Matrix> z(x.data(), geom.nb.cols(), geom.cols());
      const auto ev = detail::group_eval(geom, z, eps_live,
                                         grad != nullptr || hess != nullptr);
      Vector h1(groups), h2(groups);
      double total = 0.0;
      for (Index g = 0; g < groups; ++g) {
        const double s = ev.sigma[g];
        total += std::pow(s, cexp);
        if (grad || hess) {
          h1[g] = cexp * std::pow(s, cexp - 1.0);
          h2[g] = cexp * (cexp - 1.0) * std::pow(s, cexp - 2.0);
        }
      }
      const double r = 1.0 - total;
      if (r <= 0.0 || !std::isfinite(r)) return false;
      value = -std::log(r);
      if (!grad && !hess) return true;
      Matrix entry_w(geom.rows(), geom.cols());
      for (Index j = 0; j < geom.cols(); ++j)
        for (Index i = 0; i < geom.rows(); ++i)
          entry_w(i, j) = h1[geom.group_of(i, j)];
      const Vector total_grad = detail::grad_z_weighted(geom, ev, entry_w);
      if (grad) {
        grad->setZero(dim);
        grad->head(zdim) = total_grad / r;
      }
      if (hess) {
        hess->setZero(dim, dim);
        Matrix hz = (total_grad * total_grad.transpose()) / (r * r);
        Matrix entry_coef = entry_w.cwiseProduct(ev.phi2) / r;
        detail::add_hess_entry_diag(geom, entry_coef, &hz);
        for (Index g = 0; g < groups; ++g) {
          if (h2[g] == 0.0) continue;
          const Vector gs = detail::grad_z_sigma(geom, ev, g);
          hz += (h2[g] / r) * gs * gs.transpose();
        }
        hess->topLeftCorner(zdim, zdim) = hz;
      }
      return true;
    };
  } else {
    // Inner max with finite outer power: per-entry epigraphs u plus one log
    // for sum u^pout <= 1.
    nu = static_cast<double>(geom.rows() * geom.cols()) + 1.0;
    x0.tail(outer_count).setConstant(std::max(
        2.0 * eps_stages[0],
        std::pow(0.5 / static_cast<double>(outer_count), 1.0 / pout)));
    barrier = [&geom, &eps_live, zdim, dim, outer_count, rowwise, pout](
                  const Vector& x, double& value, Vector* grad,
                  Matrix* hess) -> bool {
      const Eigen::Map<const Matrix> z(x.data(), geom.nb.cols(), geom.cols());
      const auto ev = detail::group_eval(geom, z, eps_live,
                                         grad != nullptr || hess != nullptr);
      value = 0.0;
      double total = 0.0;
      Vector u = x.tail(outer_count);
      Vector up1(outer_count), up2(outer_count);
      for (Index g = 0; g < outer_count; ++g) {
        if (u[g] <= 0.0) return false;
        total += std::pow(u[g], pout);
        up1[g] = pout * std::pow(u[g], pout - 1.0);
        up2[g] = pout * (pout - 1.0) * std::pow(u[g], pout - 2.0);
      }
      const double r = 1.0 - total;
      if (r <= 0.0) return false;
      value = -std::log(r);
      Matrix slack(geom.rows(), geom.cols());
      for (Index j = 0; j < geom.cols(); ++j)
        for (Index i = 0; i < geom.rows(); ++i) {
          const Index og = rowwise ? i : j;
          slack(i, j) = u[og] - ev.sigma[geom.group_of(i, j)];
          if (slack(i, j) <= 0.0) return false;
          value -= std::log(slack(i, j));
        }
      if (!grad && !hess) return true;
      const Index dloc = geom.nb.cols();
      if (grad) {
        grad->setZero(dim);
        const Matrix entry_w = slack.cwiseInverse();
        grad->head(zdim) = detail::grad_z_weighted(geom, ev, entry_w);
        for (Index g = 0; g < outer_count; ++g) (*grad)[zdim + g] = up1[g] / r;
        for (Index j = 0; j < geom.cols(); ++j)
          for (Index i = 0; i < geom.rows(); ++i)
            (*grad)[zdim + (rowwise ? i : j)] -= 1.0 / slack(i, j);
      }
      if (hess) {
        hess->setZero(dim, dim);
        Matrix entry_coef(geom.rows(), geom.cols());
        for (Index j = 0; j < geom.cols(); ++j)
          for (Index i = 0; i < geom.rows(); ++i) {
            const double inv = 1.0 / slack(i, j);
            entry_coef(i, j) =
                ev.phi2(i, j) * inv + ev.phi1(i, j) * ev.phi1(i, j) * inv * inv;
          }
        Matrix hz = Matrix::Zero(zdim, zdim);
        detail::add_hess_entry_diag(geom, entry_coef, &hz);
        hess->topLeftCorner(zdim, zdim) = hz;
        for (Index j = 0; j < geom.cols(); ++j)
          for (Index i = 0; i < geom.rows(); ++i) {
            const Index og = rowwise ? i : j;
            const double inv2 = 1.0 / (slack(i, j) * slack(i, j));
            const Vector dse = ev.phi1(i, j) * geom.nb.row(i).transpose();
            hess->block(j * dloc, zdim + og, dloc, 1) -= inv2 * dse;
            hess->block(zdim + og, j * dloc, 1, dloc) -= inv2 * dse.transpose();
            (*hess)(zdim + og, zdim + og) += inv2;
          }
        for (Index g = 0; g < outer_count; ++g)
          (*hess)(zdim + g, zdim + g) += up2[g] / r;
        const Vector upv = up1 / r;
        hess->bottomRightCorner(outer_count, outer_count) +=
            upv * upv.transpose();
      }
      return true;
    };
  }

  bool converged = true;
  double last_gap = std::numeric_limits<double>::infinity();
  for (double eps : eps_stages) {
    eps_live = eps;
    BarrierOptions opt;
    opt.gap_rel_tol = std::min(tol, 1e-9);
    BarrierResult br = barrier_minimize(f0, barrier, nu, x0, opt);
    if (br.x.size() != dim) {
      converged = false;
      break;
    }
    if (!br.converged) converged = false;
    x0 = br.x;
    last_gap = br.gap;
  }

  sol.y = Eigen::Map<const Matrix>(x0.data(), ry, cy);
  sol.value = (c.transpose() * sol.y).trace();
  // The iterate is strictly feasible, so the value is a guaranteed lower
  // bound of the maximum; the barrier gap bounds the shortfall.
  sol.status.kkt_residual = last_gap / (1.0 + std::abs(sol.value));
  sol.status.tag =
      converged ? SolveTag::Optimal : SolveTag::NumericalFailure;
  return sol;
}

}  // namespace gmnorm::convex
