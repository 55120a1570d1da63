#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "gmnorm/convex/newton.hpp"
#include "gmnorm/convex/status.hpp"
#include "gmnorm/linalg.hpp"
#include "gmnorm/norms.hpp"

namespace gmnorm::convex {

namespace detail {

// The entry matrix seen by an L_{p,q} norm, parameterized affinely as
// E(Z) = E0 + NB * Z with Z a d x cols variable block. Groups collect the
// entries the inner norm runs over: columns, rows (transposed specs), or
// single entries (inner exponent inf).
enum class GroupMode { Columns, Rows, Entries };

struct GroupGeometry {
  Matrix e0;
  Matrix nb;  // e0.rows() x d
  GroupMode mode;
  double pin;  // finite inner power; Entries mode uses the plain smooth abs

  Index rows() const { return e0.rows(); }
  Index cols() const { return e0.cols(); }
  Index dim() const { return nb.cols() * e0.cols(); }
  Index num_groups() const {
    switch (mode) {
      case GroupMode::Columns: return cols();
      case GroupMode::Rows: return rows();
      case GroupMode::Entries: return rows() * cols();
    }
    return 0;
  }
  Index group_of(Index i, Index j) const {
    switch (mode) {
      case GroupMode::Columns: return j;
      case GroupMode::Rows: return i;
      case GroupMode::Entries: return i + j * rows();
    }
    return 0;
  }
};

struct GroupEval {
  Matrix e;     // E(Z)
  Matrix phi1;  // d/dE of phi
  Matrix phi2;  // d^2/dE^2 of phi
  Vector sigma;  // per-group sums of phi
};

// phi(x) = (x^2 + eps^2)^(pin/2): a smooth convex stand-in for |x|^pin whose
// error vanishes with eps.
inline GroupEval group_eval(const GroupGeometry& geom, const Matrix& z,
                            double eps, bool with_derivatives) {
  GroupEval ev;
  ev.e = geom.e0 + geom.nb * z;
  const double pin = geom.mode == GroupMode::Entries ? 1.0 : geom.pin;
  ev.sigma.setZero(geom.num_groups());
  if (with_derivatives) {
    ev.phi1.resize(ev.e.rows(), ev.e.cols());
    ev.phi2.resize(ev.e.rows(), ev.e.cols());
  }
  for (Index j = 0; j < ev.e.cols(); ++j) {
    for (Index i = 0; i < ev.e.rows(); ++i) {
      const double x = ev.e(i, j);
      const double s = x * x + eps * eps;
      ev.sigma[geom.group_of(i, j)] += std::pow(s, 0.5 * pin);
      if (with_derivatives) {
        ev.phi1(i, j) = pin * x * std::pow(s, 0.5 * pin - 1.0);
        ev.phi2(i, j) = pin * std::pow(s, 0.5 * pin - 2.0) *
                        ((pin - 1.0) * x * x + eps * eps);
      }
    }
  }
  return ev;
}

// vec(NB^T * (weights o phi1)) where weights holds one coefficient per entry.
inline Vector grad_z_weighted(const GroupGeometry& geom, const GroupEval& ev,
                              const Matrix& entry_weights) {
  const Index d = geom.nb.cols();
  Vector g(geom.dim());
  for (Index j = 0; j < geom.cols(); ++j)
    g.segment(j * d, d) =
        geom.nb.transpose() * entry_weights.col(j).cwiseProduct(ev.phi1.col(j));
  return g;
}

// Dense gradient of sigma_g with respect to vec(Z).
inline Vector grad_z_sigma(const GroupGeometry& geom, const GroupEval& ev,
                           Index g) {
  const Index d = geom.nb.cols();
  Vector grad = Vector::Zero(geom.dim());
  switch (geom.mode) {
    case GroupMode::Columns:
      grad.segment(g * d, d) = geom.nb.transpose() * ev.phi1.col(g);
      break;
    case GroupMode::Rows:
      for (Index j = 0; j < geom.cols(); ++j)
        grad.segment(j * d, d) = ev.phi1(g, j) * geom.nb.row(g).transpose();
      break;
    case GroupMode::Entries: {
      const Index i = g % geom.rows();
      const Index j = g / geom.rows();
      grad.segment(j * d, d) = ev.phi1(i, j) * geom.nb.row(i).transpose();
      break;
    }
  }
  return grad;
}

// Adds the entry-diagonal curvature sum_e coef(e) * (dE_e/dz)(dE_e/dz)^T,
// which is block diagonal per column of E.
inline void add_hess_entry_diag(const GroupGeometry& geom,
                                const Matrix& entry_coefs, Matrix* hess) {
  const Index d = geom.nb.cols();
  for (Index j = 0; j < geom.cols(); ++j) {
    hess->block(j * d, j * d, d, d) +=
        geom.nb.transpose() * entry_coefs.col(j).asDiagonal() * geom.nb;
  }
}

// A subgradient of lpq_norm at y (chooses argmax coordinates at kinks): used
// only to build dual certificates, where any subgradient yields a valid bound.
inline Matrix lpq_subgradient(const Matrix& y, const LpqSpec& spec) {
  const Matrix x = spec.transposed ? y.transpose() : y;
  Vector col_norms(x.cols());
  for (Index j = 0; j < x.cols(); ++j)
    col_norms[j] = vector_norm(x.col(j), spec.inner);
  const double value = vector_norm(col_norms, spec.outer);
  Matrix g = Matrix::Zero(x.rows(), x.cols());
  if (value > 0.0) {
    Vector douter = Vector::Zero(x.cols());
    if (spec.outer.is_inf()) {
      Index top;
      col_norms.maxCoeff(&top);
      douter[top] = 1.0;
    } else {
      for (Index j = 0; j < x.cols(); ++j)
        douter[j] = col_norms[j] > 0.0
                        ? std::pow(col_norms[j] / value, spec.outer.value() - 1.0)
                        : 0.0;
      if (spec.outer.is_one()) douter.setConstant(1.0);
    }
    for (Index j = 0; j < x.cols(); ++j) {
      if (col_norms[j] == 0.0 || douter[j] == 0.0) continue;
      if (spec.inner.is_inf()) {
        Index top;
        x.col(j).cwiseAbs().maxCoeff(&top);
        g(top, j) = douter[j] * (x(top, j) >= 0.0 ? 1.0 : -1.0);
      } else if (spec.inner.is_one()) {
        for (Index i = 0; i < x.rows(); ++i)
          g(i, j) = x(i, j) == 0.0 ? 0.0 : douter[j] * std::copysign(1.0, x(i, j));
      } else {
        for (Index i = 0; i < x.rows(); ++i)
          g(i, j) = douter[j] * std::copysign(std::pow(std::abs(x(i, j)) / col_norms[j],
                                                       spec.inner.value() - 1.0),
                                              x(i, j));
      }
    }
  }
  return spec.transposed ? Matrix(g.transpose()) : g;
}

inline GroupMode group_mode_for(const LpqSpec& spec) {
  if (spec.inner.is_inf()) return GroupMode::Entries;
  return spec.transposed ? GroupMode::Rows : GroupMode::Columns;
}

}  // namespace detail

// min lpq_norm(Y, spec)  subject to  Mt * Y = Ct.
struct MatrixMinNormSolution {
  double value = std::numeric_limits<double>::infinity();
  Matrix y;
  SolveStatus status{SolveTag::Infeasible, 0.0};
};

inline MatrixMinNormSolution min_matrix_norm_under_equality(
    const Matrix& mt, const Matrix& ct, const LpqSpec& spec,
    double tol = 1e-8) {
  if (mt.rows() != ct.rows())
    throw invalid_input("min_matrix_norm_under_equality: row mismatch");
  require_finite(mt, "min_matrix_norm_under_equality");
  require_finite(ct, "min_matrix_norm_under_equality");

  MatrixMinNormSolution sol;
  const Index l = mt.cols();
  const Index c = ct.cols();

  const SvdFactors f = svd(mt);
  const Index rank = rank_from_singular_values(f.sigma, mt.rows(), mt.cols());
  Matrix y0 = Matrix::Zero(l, c);
  for (Index i = 0; i < rank; ++i)
    y0 += f.vt.row(i).transpose() *
          (f.u.col(i).transpose() * ct) / f.sigma[i];
  if ((mt * y0 - ct).norm() > 1e-8 * (1.0 + ct.norm() + mt.norm())) {
    sol.status = {SolveTag::Infeasible, 0.0};
    return sol;
  }

  const Index d = l - rank;
  const bool frobenius = spec.inner.is_two() && spec.outer.is_two();
  if (d == 0 || frobenius || ct.norm() == 0.0) {
    // The per-column least-squares solution is the Frobenius minimizer, and
    // with a trivial kernel it is the only feasible point at all.
    sol.y = y0;
    sol.value = lpq_norm(sol.y, spec);
    sol.status = {SolveTag::Optimal, 0.0};
    if (d > 0 && !frobenius && ct.norm() != 0.0) sol.status.kkt_residual = 0.0;
    return sol;
  }

  const double unit = std::max(y0.cwiseAbs().maxCoeff(), 1e-300);
  detail::GroupGeometry geom{y0 / unit, f.vt.bottomRows(d).transpose(),
                             detail::group_mode_for(spec),
                             spec.inner.is_inf() ? 1.0 : spec.inner.value()};
  const Index zdim = geom.dim();
  const Index groups = geom.num_groups();
  const double pout = spec.outer.value();  // may be inf

  bool converged = true;
  Matrix zfinal = Matrix::Zero(d, c);

  const double eps_stages[] = {1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12};

  if (spec.outer.is_inf()) {
    // min T over { sigma_g(Z) <= T }: the norm is T^(1/pin) by monotonicity.
    Vector x0(zdim + 1);
    x0.head(zdim).setZero();
    {
      const auto ev0 = detail::group_eval(geom, Matrix::Zero(d, c),
                                          eps_stages[0], false);
      x0[zdim] = ev0.sigma.maxCoeff() + 1.0;
    }
    for (double eps : eps_stages) {
      auto f0 = [&](const Vector& x, double& value, Vector* grad,
                    Matrix* hess) -> bool {
        value = x[zdim];
        if (grad) {
          grad->setZero(x.size());
          (*grad)[zdim] = 1.0;
        }
        if (hess) hess->setZero(x.size(), x.size());
        return true;
      };
      auto barrier = [&](const Vector& x, double& value, Vector* grad,
                         Matrix* hess) -> bool {
        const Eigen::Map<const Matrix> z(x.data(), d, c);
        const auto ev =
            detail::group_eval(geom, z, eps, grad != nullptr || hess != nullptr);
        value = 0.0;
        Vector slack(groups);
        for (Index g = 0; g < groups; ++g) {
          slack[g] = x[zdim] - ev.sigma[g];
          if (slack[g] <= 0.0) return false;
          value -= std::log(slack[g]);
        }
        if (!grad && !hess) return true;
        Matrix entry_w(geom.rows(), geom.cols());
        for (Index j = 0; j < geom.cols(); ++j)
          for (Index i = 0; i < geom.rows(); ++i)
            entry_w(i, j) = 1.0 / slack[geom.group_of(i, j)];
        if (grad) {
          grad->setZero(x.size());
          grad->head(zdim) = detail::grad_z_weighted(geom, ev, entry_w);
          double dt = 0.0;
          for (Index g = 0; g < groups; ++g) dt -= 1.0 / slack[g];
          (*grad)[zdim] = dt;
        }
        if (hess) {
          hess->setZero(x.size(), x.size());
          Matrix entry_coef(geom.rows(), geom.cols());
          for (Index j = 0; j < geom.cols(); ++j)
            for (Index i = 0; i < geom.rows(); ++i)
              entry_coef(i, j) = ev.phi2(i, j) * entry_w(i, j);
          Matrix hz = Matrix::Zero(zdim, zdim);
          detail::add_hess_entry_diag(geom, entry_coef, &hz);
          double htt = 0.0;
          Vector htz = Vector::Zero(zdim);
          for (Index g = 0; g < groups; ++g) {
            const Vector gs = detail::grad_z_sigma(geom, ev, g);
            const double inv2 = 1.0 / (slack[g] * slack[g]);
            hz += inv2 * gs * gs.transpose();
            htz -= inv2 * gs;
            htt += inv2;
          }
          hess->topLeftCorner(zdim, zdim) = hz;
          hess->col(zdim).head(zdim) = htz;
          hess->row(zdim).head(zdim) = htz.transpose();
          (*hess)(zdim, zdim) = htt;
        }
        return true;
      };
      BarrierOptions opt;
      opt.gap_rel_tol = std::min(tol, 1e-9);
      BarrierResult br =
          barrier_minimize(f0, barrier, static_cast<double>(groups), x0, opt);
      if (br.x.size() != x0.size()) {
        converged = false;
        break;
      }
      if (!br.converged) converged = false;
      x0 = br.x;
      const Eigen::Map<const Matrix> z(x0.data(), d, c);
      zfinal = z;
    }
  } else if (spec.inner.is_inf()) {
    // Inner max norm with finite outer power: epigraph u per row (or column
    // when transposed), smooth objective sum u^pout over the epigraphs.
    const bool rowwise = spec.transposed;
    const Index outer_count = rowwise ? geom.rows() : geom.cols();
    Vector x0(zdim + outer_count);
    x0.head(zdim).setZero();
    {
      const auto ev0 =
          detail::group_eval(geom, Matrix::Zero(d, c), eps_stages[0], false);
      Vector umax = Vector::Zero(outer_count);
      for (Index j = 0; j < geom.cols(); ++j)
        for (Index i = 0; i < geom.rows(); ++i) {
          const Index og = rowwise ? i : j;
          umax[og] = std::max(umax[og], ev0.sigma[geom.group_of(i, j)]);
        }
      x0.tail(outer_count) = umax.array() + 1.0;
    }
    for (double eps : eps_stages) {
      auto f0 = [&](const Vector& x, double& value, Vector* grad,
                    Matrix* hess) -> bool {
        value = 0.0;
        if (grad) grad->setZero(x.size());
        if (hess) hess->setZero(x.size(), x.size());
        for (Index g = 0; g < outer_count; ++g) {
          const double u = x[zdim + g];
          if (u <= 0.0) return false;
          value += std::pow(u, pout);
          if (grad) (*grad)[zdim + g] = pout * std::pow(u, pout - 1.0);
          if (hess)
            (*hess)(zdim + g, zdim + g) =
                pout * (pout - 1.0) * std::pow(u, pout - 2.0);
        }
        return true;
      };
      auto barrier = [&](const Vector& x, double& value, Vector* grad,
                         Matrix* hess) -> bool {
        const Eigen::Map<const Matrix> z(x.data(), d, c);
        const auto ev =
            detail::group_eval(geom, z, eps, grad != nullptr || hess != nullptr);
        value = 0.0;
        Matrix slack(geom.rows(), geom.cols());
        for (Index j = 0; j < geom.cols(); ++j)
          for (Index i = 0; i < geom.rows(); ++i) {
            const Index og = rowwise ? i : j;
            slack(i, j) = x[zdim + og] - ev.sigma[geom.group_of(i, j)];
            if (slack(i, j) <= 0.0) return false;
            value -= std::log(slack(i, j));
          }
        if (!grad && !hess) return true;
        const Index dloc = geom.nb.cols();
        if (grad) {
          grad->setZero(x.size());
          const Matrix entry_w = slack.cwiseInverse();
          grad->head(zdim) = detail::grad_z_weighted(geom, ev, entry_w);
          for (Index j = 0; j < geom.cols(); ++j)
            for (Index i = 0; i < geom.rows(); ++i)
              (*grad)[zdim + (rowwise ? i : j)] -= 1.0 / slack(i, j);
        }
        if (hess) {
          hess->setZero(x.size(), x.size());
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
              const Vector dse =
                  ev.phi1(i, j) * geom.nb.row(i).transpose();  // d entries
              hess->block(j * dloc, zdim + og, dloc, 1) -= inv2 * dse;
              hess->block(zdim + og, j * dloc, 1, dloc) -=
                  inv2 * dse.transpose();
              (*hess)(zdim + og, zdim + og) += inv2;
            }
        }
        return true;
      };
      BarrierOptions opt;
      opt.gap_rel_tol = std::min(tol, 1e-9);
      BarrierResult br = barrier_minimize(
          f0, barrier, static_cast<double>(geom.rows() * geom.cols()), x0, opt);
      if (br.x.size() != x0.size()) {
        converged = false;
        break;
      }
      if (!br.converged) converged = false;
      x0 = br.x;
      const Eigen::Map<const Matrix> z(x0.data(), d, c);
      zfinal = z;
    }
  } else {
    // Both exponents finite: unconstrained Newton on
    // F(Z) = sum_g sigma_g^{pout/pin}, a smooth convex monotone transform of
    // the norm.
    const double cexp = pout / geom.pin;
    Vector x0 = Vector::Zero(zdim);
    for (double eps : eps_stages) {
      auto objective = [&](const Vector& x, double& value, Vector* grad,
                           Matrix* hess) -> bool {
        const Eigen::Map<const Matrix> z(x.data(), d, c);
        const auto ev =
            detail::group_eval(geom, z, eps, grad != nullptr || hess != nullptr);
        value = 0.0;
        Vector h1(groups), h2(groups);
        for (Index g = 0; g < groups; ++g) {
          const double s = ev.sigma[g];
          value += std::pow(s, cexp);
          if (grad || hess) {
            h1[g] = cexp * std::pow(s, cexp - 1.0);
            h2[g] = cexp * (cexp - 1.0) * std::pow(s, cexp - 2.0);
          }
        }
        if (!std::isfinite(value)) return false;
        if (grad) {
          Matrix entry_w(geom.rows(), geom.cols());
          for (Index j = 0; j < geom.cols(); ++j)
            for (Index i = 0; i < geom.rows(); ++i)
              entry_w(i, j) = h1[geom.group_of(i, j)];
          *grad = detail::grad_z_weighted(geom, ev, entry_w);
        }
        if (hess) {
          hess->setZero(zdim, zdim);
          Matrix entry_coef(geom.rows(), geom.cols());
          for (Index j = 0; j < geom.cols(); ++j)
            for (Index i = 0; i < geom.rows(); ++i)
              entry_coef(i, j) = h1[geom.group_of(i, j)] * ev.phi2(i, j);
          detail::add_hess_entry_diag(geom, entry_coef, hess);
          for (Index g = 0; g < groups; ++g) {
            if (h2[g] == 0.0) continue;
            const Vector gs = detail::grad_z_sigma(geom, ev, g);
            *hess += h2[g] * gs * gs.transpose();
          }
        }
        return true;
      };
      NewtonOptions opt;
      double fstart;
      objective(x0, fstart, nullptr, nullptr);
      opt.decrement_tol = 1e-15 * (1.0 + std::abs(fstart));
      NewtonResult nr = newton_minimize(objective, x0, opt);
      if (!nr.converged) converged = false;
      x0 = nr.x;
      const Eigen::Map<const Matrix> z(x0.data(), d, c);
      zfinal = z;
    }
  }

  sol.y = unit * (geom.e0 + geom.nb * zfinal);
  sol.value = lpq_norm(sol.y, spec);

  // Weak-duality certificate: any Lambda gives the lower bound
  // trace(Ct^T Lambda) / ||Mt^T Lambda||_{dual spec}.
  const Matrix g = detail::lpq_subgradient(sol.y, spec);
  Matrix lambda = Matrix::Zero(mt.rows(), c);
  for (Index i = 0; i < rank; ++i)
    lambda += f.u.col(i) * (f.vt.row(i) * g) / f.sigma[i];
  const double denom = lpq_norm(mt.transpose() * lambda, lpq_dual_spec(spec));
  double lb = 0.0;
  if (denom > 0.0)
    lb = (ct.transpose() * lambda).trace() / denom;
  const double gap =
      std::max(0.0, sol.value - lb) / std::max(1.0, sol.value);
  sol.status.kkt_residual = gap;
  sol.status.tag = (converged && gap <= std::max(tol, 1e-8) * 10.0)
                       ? SolveTag::Optimal
                       : SolveTag::NumericalFailure;
  return sol;
}

}  // namespace gmnorm::convex
