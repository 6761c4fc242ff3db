#pragma once

#include "madlut/matrix.hpp"

namespace madlut {

std::size_t conv_out_dim(std::size_t in, std::size_t kernel, std::size_t stride,
                         std::size_t padding);

/// Lowers an NCHW tensor to the (N*H_o*W_o) x (C_i*h_k*w_k) patch matrix.
/// Column layout is ic*h_k*w_k + kx*w_k + ky; out-of-bounds (padding) reads
/// are zero. Row r corresponds to (batch, out_y, out_x) in row-major order.
MatrixF64 im2col(const TensorF64& x, std::size_t kernel_h, std::size_t kernel_w,
                 std::size_t stride, std::size_t padding);

/// Direct nested-loop cross-correlation (no kernel flip); the reference the
/// im2col+matmul path is checked against.
TensorF64 conv2d_direct(const TensorF64& x, const TensorF64& w,
                        std::size_t stride, std::size_t padding);

/// Reshapes C_o x C_i x h_k x w_k weights to the (C_i*h_k*w_k) x C_o matrix
/// matching the im2col column layout.
MatrixF64 weights_as_matrix(const TensorF64& w);

/// Inverse of the row layout used by im2col: folds a (N*H_o*W_o) x C_o matrix
/// back to an NCHW tensor.
TensorF64 rows_to_nchw(const MatrixF64& m, std::size_t n, std::size_t c_out,
                       std::size_t h_out, std::size_t w_out);

}  // namespace madlut
