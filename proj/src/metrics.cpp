#include "madlut/metrics.hpp"

#include <cmath>
#include <limits>

namespace madlut {

double frobenius_norm(const MatrixF64& m) {
  double sq = 0.0;
  for (double v : m.elems) sq += v * v;
  return std::sqrt(sq);
}

ErrorReport frobenius_error(const MatrixF64& approx, const MatrixF64& exact) {
  if (!approx.same_shape(exact))
    throw ValidationError("frobenius_error: shape mismatch");
  ErrorReport rep;
  double sq = 0.0;
  for (std::size_t i = 0; i < exact.elems.size(); ++i) {
    const double d = approx.elems[i] - exact.elems[i];
    sq += d * d;
    const double ad = std::fabs(d);
    if (ad > rep.max_abs_elem) rep.max_abs_elem = ad;
  }
  rep.abs_frobenius = std::sqrt(sq);
  const double ref = frobenius_norm(exact);
  if (ref > 0.0) {
    rep.rel_frobenius = rep.abs_frobenius / ref;
  } else {
    rep.zero_reference = true;
    rep.rel_frobenius = rep.abs_frobenius > 0.0
                            ? std::numeric_limits<double>::infinity()
                            : 0.0;
  }
  return rep;
}

}  // namespace madlut
