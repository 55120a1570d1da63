#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "gmnorm/errors.hpp"
#include "gmnorm/matrix.hpp"

namespace gmnorm {

// Exponent in the extended interval [1, inf]. The values 1, 2 and inf are
// stored exactly, so tag queries and conjugation of tagged values never go
// through inexact arithmetic.
class Exponent {
 public:
  // Implicit by design: `Exponent p = 2` and `vector_norm(x, 2)` read like
  // the underlying math.
  Exponent(double value) : value_(value) {
    if (std::isnan(value) || value < 1.0)
      throw invalid_input("exponent must lie in [1, inf], got " +
                          std::to_string(value));
  }

  static Exponent inf() {
    return Exponent(std::numeric_limits<double>::infinity());
  }

  double value() const { return value_; }
  bool is_one() const { return value_ == 1.0; }
  bool is_two() const { return value_ == 2.0; }
  bool is_inf() const { return std::isinf(value_); }
  bool is_finite() const { return !is_inf(); }

  friend bool operator==(Exponent a, Exponent b) {
    return a.value_ == b.value_;
  }
  friend bool operator!=(Exponent a, Exponent b) { return !(a == b); }

 private:
  double value_;
};

// Hoelder conjugate p* with 1/p + 1/p* = 1. The pairs 1 <-> inf and 2 <-> 2
// are exact.
inline Exponent holder_conjugate(Exponent e) {
  if (e.is_one()) return Exponent::inf();
  if (e.is_inf()) return Exponent(1.0);
  if (e.is_two()) return e;
  return Exponent(e.value() / (e.value() - 1.0));
}

// q/(2-q) for q in (1, 2]; returns the inf tag at q = 2 so the block-SDP
// objective degrades to a max-norm term instead of dividing by zero.
inline Exponent sdp_exponent_from_q(Exponent q) {
  if (q.is_two()) return Exponent::inf();
  if (q.is_one() || q.is_inf() || q.value() > 2.0)
    throw unsupported_region("q/(2-q) exponent needs q in (1, 2]");
  return Exponent(q.value() / (2.0 - q.value()));
}

// p/(p-2) for p in [2, inf); returns the inf tag at p = 2.
inline Exponent sdp_exponent_from_p(Exponent p) {
  if (p.is_two()) return Exponent::inf();
  if (p.is_inf() || p.value() < 2.0)
    throw unsupported_region("p/(p-2) exponent needs p in [2, inf)");
  return Exponent(p.value() / (p.value() - 2.0));
}

// (sum |x_i|^p)^(1/p); max |x_i| for p = inf. Large finite p is evaluated
// with the largest entry factored out so the powers stay in range.
inline double vector_norm(const Vector& x, Exponent e) {
  if (x.size() == 0) return 0.0;
  if (e.is_one()) return x.lpNorm<1>();
  if (e.is_two()) return x.norm();
  if (e.is_inf()) return x.lpNorm<Eigen::Infinity>();
  const double top = x.cwiseAbs().maxCoeff();
  if (top == 0.0) return 0.0;
  double sum = 0.0;
  for (Index i = 0; i < x.size(); ++i)
    sum += std::pow(std::abs(x[i]) / top, e.value());
  return top * std::pow(sum, 1.0 / e.value());
}

// gamma_s: the s-th root of the s-th absolute moment of a standard Gaussian,
//   gamma_s = ((2^(s/2) / sqrt(pi)) * Gamma((s+1)/2))^(1/s),
// evaluated through the log-Gamma function. gamma_1 = sqrt(2/pi), gamma_2 = 1.
inline double gamma_s(double s) {
  if (std::isnan(s) || s < 1.0 || std::isinf(s))
    throw invalid_input("gamma_s needs s in [1, inf), got " +
                        std::to_string(s));
  const double log_pi = std::log(3.14159265358979323846);
  const double log_moment =
      0.5 * s * 0.69314718055994530942 - 0.5 * log_pi +
      std::lgamma(0.5 * (s + 1.0));
  return std::exp(log_moment / s);
}

// Entry-wise matrix norm family: `inner` applies to each column, `outer` to
// the vector of column norms. With `transposed` set the same recipe runs on
// the transpose, i.e. rows take the inner norm.
struct LpqSpec {
  Exponent inner;
  Exponent outer;
  bool transposed = false;
};

inline double lpq_norm(const Matrix& m, const LpqSpec& spec) {
  require_finite(m, "lpq_norm");
  const Matrix x = spec.transposed ? m.transpose() : m;
  Vector col_norms(x.cols());
  for (Index j = 0; j < x.cols(); ++j)
    col_norms[j] = vector_norm(x.col(j), spec.inner);
  return vector_norm(col_norms, spec.outer);
}

// The dual norm of L_{p,q} is L_{p*,q*}; transposition is preserved.
inline LpqSpec lpq_dual_spec(const LpqSpec& spec) {
  return {holder_conjugate(spec.inner), holder_conjugate(spec.outer),
          spec.transposed};
}

}  // namespace gmnorm
