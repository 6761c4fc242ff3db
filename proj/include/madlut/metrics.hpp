#pragma once

#include "madlut/matrix.hpp"

namespace madlut {

/// Frobenius-norm comparison of an approximate product against the exact one.
/// When the reference norm is zero and the approximation is not,
/// rel_frobenius is +inf and zero_reference is set; never a quiet NaN.
struct ErrorReport {
  double abs_frobenius = 0.0;
  double rel_frobenius = 0.0;
  double max_abs_elem = 0.0;
  bool zero_reference = false;
};

double frobenius_norm(const MatrixF64& m);

ErrorReport frobenius_error(const MatrixF64& approx, const MatrixF64& exact);

}  // namespace madlut
