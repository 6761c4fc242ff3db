#pragma once

#include "madlut/matrix.hpp"

namespace madlut {

/// Reference triple-loop product. Deterministic; the baseline every
/// approximation is measured against.
MatrixF64 matmul_exact(const MatrixF64& a, const MatrixF64& b);

}  // namespace madlut
