#pragma once

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "gmnorm/convex/newton.hpp"
#include "gmnorm/convex/status.hpp"
#include "gmnorm/linalg.hpp"
#include "gmnorm/norms.hpp"

namespace gmnorm::convex {

// min (1/2)(||v||_{v_exp} + ||w||_{w_exp})  over the feasible set
//   [[Diag(v), -A], [-A^T, B^T Diag(w) B]] >= 0.
// Negative entries never help (taking |v|, |w| preserves feasibility), so the
// solver restricts to the nonnegative orthant.
struct BlockSdpProblem {
  Matrix a;  // m x n
  Matrix b;  // l x n
  Exponent v_exp;
  Exponent w_exp;
};

struct BlockSdpSolution {
  double value = std::numeric_limits<double>::infinity();
  Vector v;
  Vector w;
  SolveStatus status{SolveTag::NumericalFailure, 1.0};
  // Scaled dual certificate Z = (2/t) S^{-1} at the final central point: PSD,
  // and (after normalizing its diagonal extractions) nearly attains the value
  // in the trace form of the Lagrange dual.
  Matrix dual_z;
};

namespace detail {

// Value/grad/hess of ||v||_e restricted to v > 0, written with the largest
// coordinate factored out so large exponents stay in range.
struct PositiveNormParts {
  double value;
  Vector grad;
  Matrix hess;
};

inline PositiveNormParts positive_norm_parts(const Vector& v, double e,
                                             bool want_hess) {
  PositiveNormParts parts;
  parts.value = vector_norm(v, Exponent(e));
  const Index n = v.size();
  const double na = std::max(parts.value, 1e-300);
  Vector ratio_em1(n);
  for (Index i = 0; i < n; ++i)
    ratio_em1[i] = std::pow(v[i] / na, e - 1.0);
  parts.grad = ratio_em1;
  if (want_hess) {
    Vector ratio_em2(n);
    for (Index i = 0; i < n; ++i)
      ratio_em2[i] = std::pow(v[i] / na, e - 2.0);
    parts.hess = ((e - 1.0) / na) * (Matrix(ratio_em2.asDiagonal()) -
                                     ratio_em1 * ratio_em1.transpose());
  }
  return parts;
}

}  // namespace detail

inline BlockSdpSolution solve_block_sdp(const BlockSdpProblem& prob,
                                        double tol = 1e-9) {
  const Matrix& a_in = prob.a;
  const Matrix& b_in = prob.b;
  if (a_in.cols() != b_in.cols())
    throw invalid_input("solve_block_sdp: A and B must have equal column counts");
  require_finite(a_in, "solve_block_sdp");
  require_finite(b_in, "solve_block_sdp");

  const Index m = a_in.rows();
  const Index l = b_in.rows();

  BlockSdpSolution sol;
  sol.v = Vector::Zero(m);
  sol.w = Vector::Zero(l);

  if (a_in.norm() == 0.0) {
    sol.value = 0.0;
    sol.status = {SolveTag::Optimal, 0.0};
    sol.dual_z = Matrix::Zero(m + a_in.cols(), m + a_in.cols());
    return sol;
  }

  // Reduce to an injective B. When Ker(B) escapes Ker(A) the feasible set is
  // empty and the relaxation value is +inf, matching the unbounded norm.
  Matrix ar = a_in;
  Matrix br = b_in;
  double sigma_min_b;
  {
    const SvdFactors f = svd(b_in);
    const Index r = rank_from_singular_values(f.sigma, l, b_in.cols());
    if (r < b_in.cols()) {
      const KernelRelation rel = kernel_relation(a_in, b_in);
      if (rel.tag == KernelRelation::Tag::Escapes) {
        sol.status = {SolveTag::Infeasible, 0.0};
        return sol;
      }
      ar = a_in * f.vt.topRows(r).transpose();
      br = f.u.leftCols(r) * f.sigma.head(r).asDiagonal();
      sigma_min_b = f.sigma[r - 1];
    } else {
      sigma_min_b = f.sigma[b_in.cols() - 1];
    }
  }
  const Index k = ar.cols();

  const bool v_gen = prob.v_exp.is_finite() && !prob.v_exp.is_one();
  const bool w_gen = prob.w_exp.is_finite() && !prob.w_exp.is_one();
  const Index tv_pos = prob.v_exp.is_inf() ? m + l : -1;
  const Index tw_pos =
      prob.w_exp.is_inf() ? m + l + (prob.v_exp.is_inf() ? 1 : 0) : -1;
  const Index dim =
      m + l + (prob.v_exp.is_inf() ? 1 : 0) + (prob.w_exp.is_inf() ? 1 : 0);

  const double nu = static_cast<double>(m + k) + static_cast<double>(m + l) +
                    (prob.v_exp.is_inf() ? m : 0) +
                    (prob.w_exp.is_inf() ? l : 0);

  auto assemble_s = [&](const Vector& v, const Vector& w) -> Matrix {
    Matrix s(m + k, m + k);
    s.topLeftCorner(m, m) = Matrix(v.asDiagonal());
    s.topRightCorner(m, k) = -ar;
    s.bottomLeftCorner(k, m) = -ar.transpose();
    s.bottomRightCorner(k, k) = br.transpose() * w.asDiagonal() * br;
    return s;
  };

  auto f0 = [&](const Vector& x, double& value, Vector* grad,
                Matrix* hess) -> bool {
    const Vector v = x.head(m);
    const Vector w = x.segment(m, l);
    if (grad) grad->setZero(dim);
    if (hess) hess->setZero(dim, dim);
    value = 0.0;
    if (prob.v_exp.is_one()) {
      value += 0.5 * v.sum();
      if (grad) grad->head(m).array() += 0.5;
    } else if (prob.v_exp.is_inf()) {
      value += 0.5 * x[tv_pos];
      if (grad) (*grad)[tv_pos] += 0.5;
    } else {
      if ((v.array() <= 0.0).any()) return false;
      const auto parts =
          detail::positive_norm_parts(v, prob.v_exp.value(), hess != nullptr);
      value += 0.5 * parts.value;
      if (grad) grad->head(m) += 0.5 * parts.grad;
      if (hess) hess->topLeftCorner(m, m) += 0.5 * parts.hess;
    }
    if (prob.w_exp.is_one()) {
      value += 0.5 * w.sum();
      if (grad) grad->segment(m, l).array() += 0.5;
    } else if (prob.w_exp.is_inf()) {
      value += 0.5 * x[tw_pos];
      if (grad) (*grad)[tw_pos] += 0.5;
    } else {
      if ((w.array() <= 0.0).any()) return false;
      const auto parts =
          detail::positive_norm_parts(w, prob.w_exp.value(), hess != nullptr);
      value += 0.5 * parts.value;
      if (grad) grad->segment(m, l) += 0.5 * parts.grad;
      if (hess) hess->block(m, m, l, l) += 0.5 * parts.hess;
    }
    return std::isfinite(value);
  };

  auto barrier = [&](const Vector& x, double& value, Vector* grad,
                     Matrix* hess) -> bool {
    const Vector v = x.head(m);
    const Vector w = x.segment(m, l);
    if ((v.array() <= 0.0).any() || (w.array() <= 0.0).any()) return false;

    const Matrix s = assemble_s(v, w);
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success) return false;

    value = 0.0;
    const Matrix lfac = llt.matrixL();
    for (Index i = 0; i < m + k; ++i) {
      if (!(lfac(i, i) > 0.0)) return false;
      value -= 2.0 * std::log(lfac(i, i));
    }
    value -= v.array().log().sum() + w.array().log().sum();

    // Epigraph slacks for the inf-tagged norms.
    if (prob.v_exp.is_inf()) {
      for (Index i = 0; i < m; ++i) {
        const double sl = x[tv_pos] - v[i];
        if (sl <= 0.0) return false;
        value -= std::log(sl);
      }
    }
    if (prob.w_exp.is_inf()) {
      for (Index j = 0; j < l; ++j) {
        const double sl = x[tw_pos] - w[j];
        if (sl <= 0.0) return false;
        value -= std::log(sl);
      }
    }
    if (!std::isfinite(value)) return false;
    if (!grad && !hess) return true;

    const Matrix p = llt.solve(Matrix::Identity(m + k, m + k));
    const Matrix p11 = p.topLeftCorner(m, m);
    const Matrix p21 = p.bottomLeftCorner(k, m);
    const Matrix p22 = p.bottomRightCorner(k, k);
    const Matrix q = br * p22 * br.transpose();   // l x l
    const Matrix wcross = br * p21;               // l x m

    if (grad) {
      grad->setZero(dim);
      for (Index i = 0; i < m; ++i) grad->coeffRef(i) = -p11(i, i) - 1.0 / v[i];
      for (Index j = 0; j < l; ++j)
        grad->coeffRef(m + j) = -q(j, j) - 1.0 / w[j];
      if (prob.v_exp.is_inf()) {
        for (Index i = 0; i < m; ++i) {
          const double inv = 1.0 / (x[tv_pos] - v[i]);
          grad->coeffRef(i) += inv;
          grad->coeffRef(tv_pos) -= inv;
        }
      }
      if (prob.w_exp.is_inf()) {
        for (Index j = 0; j < l; ++j) {
          const double inv = 1.0 / (x[tw_pos] - w[j]);
          grad->coeffRef(m + j) += inv;
          grad->coeffRef(tw_pos) -= inv;
        }
      }
    }
    if (hess) {
      hess->setZero(dim, dim);
      hess->topLeftCorner(m, m) = p11.cwiseProduct(p11);
      hess->block(m, m, l, l) = q.cwiseProduct(q);
      const Matrix cross = wcross.cwiseProduct(wcross);  // l x m
      hess->block(0, m, m, l) = cross.transpose();
      hess->block(m, 0, l, m) = cross;
      for (Index i = 0; i < m; ++i)
        hess->coeffRef(i, i) += 1.0 / (v[i] * v[i]);
      for (Index j = 0; j < l; ++j)
        hess->coeffRef(m + j, m + j) += 1.0 / (w[j] * w[j]);
      if (prob.v_exp.is_inf()) {
        for (Index i = 0; i < m; ++i) {
          const double inv2 = 1.0 / ((x[tv_pos] - v[i]) * (x[tv_pos] - v[i]));
          hess->coeffRef(i, i) += inv2;
          hess->coeffRef(i, tv_pos) -= inv2;
          hess->coeffRef(tv_pos, i) -= inv2;
          hess->coeffRef(tv_pos, tv_pos) += inv2;
        }
      }
      if (prob.w_exp.is_inf()) {
        for (Index j = 0; j < l; ++j) {
          const double inv2 = 1.0 / ((x[tw_pos] - w[j]) * (x[tw_pos] - w[j]));
          hess->coeffRef(m + j, m + j) += inv2;
          hess->coeffRef(m + j, tw_pos) -= inv2;
          hess->coeffRef(tw_pos, m + j) -= inv2;
          hess->coeffRef(tw_pos, tw_pos) += inv2;
        }
      }
    }
    return true;
  };

  // Strictly feasible start: v = kv*1, w = kw*1 with the Schur complement
  // margin  kw * sigma_min(B)^2 > sigma_max(A)^2 / kv.
  const double sig_a = ar.norm() + 1.0;
  double kv = sig_a;
  double kw = 2.0 * sig_a * sig_a / (kv * sigma_min_b * sigma_min_b) + 1.0;
  Vector x0;
  for (int attempt = 0;; ++attempt) {
    x0.setZero(dim);
    x0.head(m).setConstant(kv);
    x0.segment(m, l).setConstant(kw);
    if (tv_pos >= 0) x0[tv_pos] = 1.5 * kv + 1.0;
    if (tw_pos >= 0) x0[tw_pos] = 1.5 * kw + 1.0;
    double dummy;
    if (barrier(x0, dummy, nullptr, nullptr)) break;
    if (attempt >= 6) {
      sol.status = {SolveTag::NumericalFailure, 1.0};
      return sol;
    }
    kv *= 10.0;
    kw *= 10.0;
  }

  BarrierOptions opt;
  opt.gap_rel_tol = std::min(tol, 1e-9);
  const BarrierResult br_res = barrier_minimize(f0, barrier, nu, x0, opt);
  if (br_res.x.size() != dim) {
    sol.status = {SolveTag::NumericalFailure, 1.0};
    return sol;
  }

  sol.v = br_res.x.head(m);
  sol.w = br_res.x.segment(m, l);
  sol.value = 0.5 * (vector_norm(sol.v, prob.v_exp) +
                     vector_norm(sol.w, prob.w_exp));
  const double gap_rel = br_res.gap / (1.0 + std::abs(sol.value));
  sol.status.kkt_residual = gap_rel;
  sol.status.tag =
      br_res.converged ? SolveTag::Optimal : SolveTag::NumericalFailure;

  if (br_res.t_final > 0.0) {
    const Matrix s = assemble_s(sol.v, sol.w);
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() == Eigen::Success)
      sol.dual_z =
          (2.0 / br_res.t_final) * llt.solve(Matrix::Identity(m + k, m + k));
  }
  return sol;
}

}  // namespace gmnorm::convex
