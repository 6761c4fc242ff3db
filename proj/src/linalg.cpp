#include "madlut/linalg.hpp"

namespace madlut {

MatrixF64 matmul_exact(const MatrixF64& a, const MatrixF64& b) {
  if (a.cols != b.rows)
    throw ValidationError("matmul_exact: inner dims " + std::to_string(a.cols) +
                          " vs " + std::to_string(b.rows));
  MatrixF64 out(a.rows, b.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* orow = out.row_ptr(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      const double* brow = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

}  // namespace madlut
