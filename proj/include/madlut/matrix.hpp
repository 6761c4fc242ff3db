#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace madlut {

// Error categories map to CLI exit codes: validation -> 2,
// numerical check -> 3, I/O -> 4.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Row-major dense matrix; the universal 2-D carrier across the library.
/// Element types in use: double (all math), float (storage), int8_t and
/// int32_t (quantized datapath).
template <typename T>
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> elems;  // rows * cols, row-major

  DenseMatrix() = default;

  DenseMatrix(std::size_t r, std::size_t c, T fill = T{})
      : rows(r), cols(c), elems(r * c, fill) {
    if (r == 0 || c == 0)
      throw ValidationError("DenseMatrix: rows and cols must be >= 1");
  }

  DenseMatrix(std::size_t r, std::size_t c, std::vector<T> values)
      : rows(r), cols(c), elems(std::move(values)) {
    if (r == 0 || c == 0)
      throw ValidationError("DenseMatrix: rows and cols must be >= 1");
    if (elems.size() != r * c)
      throw ValidationError("DenseMatrix: element count " +
                            std::to_string(elems.size()) + " != " +
                            std::to_string(r * c));
  }

  T& at(std::size_t r, std::size_t c) { return elems[r * cols + c]; }
  const T& at(std::size_t r, std::size_t c) const { return elems[r * cols + c]; }

  T* row_ptr(std::size_t r) { return elems.data() + r * cols; }
  const T* row_ptr(std::size_t r) const { return elems.data() + r * cols; }

  bool same_shape(const DenseMatrix& other) const {
    return rows == other.rows && cols == other.cols;
  }

  bool operator==(const DenseMatrix& other) const {
    return rows == other.rows && cols == other.cols && elems == other.elems;
  }
};

using MatrixF64 = DenseMatrix<double>;
using MatrixF32 = DenseMatrix<float>;
using MatrixI8 = DenseMatrix<int8_t>;
using MatrixI32 = DenseMatrix<int32_t>;

/// Contiguous NCHW tensor for the convolution path.
template <typename T>
struct Tensor4 {
  std::size_t n = 0, c = 0, h = 0, w = 0;
  std::vector<T> elems;  // n * c * h * w, NCHW

  Tensor4() = default;

  Tensor4(std::size_t n_, std::size_t c_, std::size_t h_, std::size_t w_,
          T fill = T{})
      : n(n_), c(c_), h(h_), w(w_), elems(n_ * c_ * h_ * w_, fill) {
    if (n_ == 0 || c_ == 0 || h_ == 0 || w_ == 0)
      throw ValidationError("Tensor4: all dims must be >= 1");
  }

  Tensor4(std::size_t n_, std::size_t c_, std::size_t h_, std::size_t w_,
          std::vector<T> values)
      : n(n_), c(c_), h(h_), w(w_), elems(std::move(values)) {
    if (n_ == 0 || c_ == 0 || h_ == 0 || w_ == 0)
      throw ValidationError("Tensor4: all dims must be >= 1");
    if (elems.size() != n_ * c_ * h_ * w_)
      throw ValidationError("Tensor4: element count mismatch");
  }

  T& at(std::size_t in, std::size_t ic, std::size_t iy, std::size_t ix) {
    return elems[((in * c + ic) * h + iy) * w + ix];
  }
  const T& at(std::size_t in, std::size_t ic, std::size_t iy,
              std::size_t ix) const {
    return elems[((in * c + ic) * h + iy) * w + ix];
  }

  bool operator==(const Tensor4& other) const {
    return n == other.n && c == other.c && h == other.h && w == other.w &&
           elems == other.elems;
  }
};

using TensorF64 = Tensor4<double>;
using TensorF32 = Tensor4<float>;

}  // namespace madlut
