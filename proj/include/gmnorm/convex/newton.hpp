#pragma once

#include <Eigen/Cholesky>
#include <functional>
#include <limits>
#include <utility>

#include "gmnorm/matrix.hpp"

namespace gmnorm::convex {

// Smooth convex function on an open domain. Returns false when x lies outside
// the domain (the line search treats that as value +inf). grad/hess may be
// null when only the value is needed.
using SmoothObjective =
    std::function<bool(const Vector& x, double& value, Vector* grad, Matrix* hess)>;

struct NewtonOptions {
  int max_iters = 200;
  double decrement_tol = 1e-12;  // stop when lambda^2/2 falls below this
  double min_step = 1e-13;       // back off until the step would vanish
};

struct NewtonResult {
  Vector x;
  double value = std::numeric_limits<double>::quiet_NaN();
  double decrement = std::numeric_limits<double>::infinity();
  int iters = 0;
  bool converged = false;
};

// Damped Newton with Armijo backtracking. The Hessian solve falls back to a
// Levenberg shift whenever factorization fails or the direction is not a
// descent direction.
inline NewtonResult newton_minimize(const SmoothObjective& f, Vector x0,
                                    const NewtonOptions& opt = {}) {
  NewtonResult res;
  res.x = std::move(x0);

  double fx;
  Vector grad(res.x.size());
  Matrix hess(res.x.size(), res.x.size());
  if (!f(res.x, fx, &grad, &hess)) return res;  // infeasible start
  res.value = fx;

  for (res.iters = 0; res.iters < opt.max_iters; ++res.iters) {
    Vector dir;
    double shift = 0.0;
    const double scale = hess.diagonal().cwiseAbs().maxCoeff() + 1e-300;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Matrix h = hess;
      if (shift > 0.0) h.diagonal().array() += shift;
      Eigen::LDLT<Matrix> ldlt(h);
      if (ldlt.info() == Eigen::Success) {
        dir = ldlt.solve(-grad);
        if (dir.allFinite() && grad.dot(dir) < 0.0) break;
      }
      dir.resize(0);
      shift = (shift == 0.0) ? 1e-12 * scale : shift * 10.0;
    }
    if (dir.size() == 0) break;  // hopeless Hessian, report non-convergence

    const double lambda2 = -grad.dot(dir);
    res.decrement = 0.5 * lambda2;
    if (res.decrement <= opt.decrement_tol) {
      res.converged = true;
      return res;
    }

    double step = 1.0;
    bool accepted = false;
    while (step >= opt.min_step) {
      const Vector trial = res.x + step * dir;
      double ft;
      if (f(trial, ft, nullptr, nullptr) && ft <= fx - 0.25 * step * lambda2) {
        res.x = trial;
        fx = ft;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    if (!f(res.x, fx, &grad, &hess)) break;
    res.value = fx;
  }

  // Accept a stall at tiny decrement as converged; otherwise report failure.
  res.converged = res.decrement <= 1e4 * opt.decrement_tol;
  return res;
}

struct BarrierOptions {
  double gap_rel_tol = 1e-9;   // target duality gap, relative to the value
  double gap_abs_floor = 1e-12;
  double t0 = 1.0;
  double t_factor = 20.0;
  int max_stages = 48;
  NewtonOptions newton;
};

struct BarrierResult {
  Vector x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double gap = std::numeric_limits<double>::infinity();
  double t_final = 0.0;  // last path parameter, for multiplier recovery
  bool converged = false;
};

// Path following for min f0(x) subject to the constraints encoded by a
// barrier with parameter nu: minimizes t*f0 + barrier for increasing t. The
// start x0 must be strictly feasible. After each centering the duality gap is
// at most nu/t (up to the Newton tolerance).
inline BarrierResult barrier_minimize(const SmoothObjective& f0,
                                      const SmoothObjective& barrier,
                                      double nu, Vector x0,
                                      const BarrierOptions& opt = {}) {
  BarrierResult res;
  res.x = std::move(x0);
  double t = opt.t0;

  for (int stage = 0; stage < opt.max_stages; ++stage) {
    const double tc = t;
    auto composite = [&](const Vector& x, double& value, Vector* grad,
                         Matrix* hess) -> bool {
      double v0, vb;
      Vector g0, gb;
      Matrix h0, hb;
      Vector* g0p = grad ? &g0 : nullptr;
      Vector* gbp = grad ? &gb : nullptr;
      Matrix* h0p = hess ? &h0 : nullptr;
      Matrix* hbp = hess ? &hb : nullptr;
      if (!f0(x, v0, g0p, h0p) || !barrier(x, vb, gbp, hbp)) return false;
      value = tc * v0 + vb;
      if (grad) *grad = tc * g0 + gb;
      if (hess) *hess = tc * h0 + hb;
      return true;
    };

    NewtonResult nr = newton_minimize(composite, res.x, opt.newton);
    if (!nr.converged && nr.x.size() == 0) return res;  // infeasible start
    res.x = nr.x;

    double v0;
    if (!f0(res.x, v0, nullptr, nullptr)) return res;
    res.objective = v0;
    res.gap = nu / t;
    res.t_final = t;

    const double target =
        std::max(opt.gap_abs_floor, opt.gap_rel_tol * (1.0 + std::abs(v0)));
    if (res.gap <= target && nr.converged) {
      res.converged = true;
      return res;
    }
    t *= opt.t_factor;
  }
  return res;
}

}  // namespace gmnorm::convex
