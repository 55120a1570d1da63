#pragma once

namespace gmnorm::convex {

enum class SolveTag { Optimal, Infeasible, Unbounded, NumericalFailure };

struct SolveStatus {
  SolveTag tag = SolveTag::Optimal;
  // Certified relative suboptimality of the returned value (from a dual
  // feasible point or the barrier gap). Optimal implies this is at most the
  // solve tolerance.
  double kkt_residual = 0.0;

  bool ok() const { return tag == SolveTag::Optimal; }
};

inline const char* to_string(SolveTag tag) {
  switch (tag) {
    case SolveTag::Optimal: return "Optimal";
    case SolveTag::Infeasible: return "Infeasible";
    case SolveTag::Unbounded: return "Unbounded";
    case SolveTag::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

}  // namespace gmnorm::convex
