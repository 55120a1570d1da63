#pragma once

#include <Eigen/Dense>
#include <string>

#include "gmnorm/errors.hpp"

namespace gmnorm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline void require_finite(const Matrix& m, const char* who) {
  if (!m.allFinite())
    throw invalid_input(std::string(who) + ": matrix has non-finite entries");
}

inline void require_finite(const Vector& v, const char* who) {
  if (!v.allFinite())
    throw invalid_input(std::string(who) + ": vector has non-finite entries");
}

}  // namespace gmnorm
