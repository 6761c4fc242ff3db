#include "madlut/im2col.hpp"

namespace madlut {

std::size_t conv_out_dim(std::size_t in, std::size_t kernel, std::size_t stride,
                         std::size_t padding) {
  const std::size_t padded = in + 2 * padding;
  if (padded < kernel)
    throw ValidationError("conv: kernel larger than padded input");
  return (padded - kernel) / stride + 1;
}

MatrixF64 im2col(const TensorF64& x, std::size_t kernel_h, std::size_t kernel_w,
                 std::size_t stride, std::size_t padding) {
  if (stride < 1) throw ValidationError("im2col: stride must be >= 1");
  const std::size_t h_out = conv_out_dim(x.h, kernel_h, stride, padding);
  const std::size_t w_out = conv_out_dim(x.w, kernel_w, stride, padding);
  MatrixF64 out(x.n * h_out * w_out, x.c * kernel_h * kernel_w, 0.0);
  for (std::size_t b = 0; b < x.n; ++b) {
    for (std::size_t oy = 0; oy < h_out; ++oy) {
      for (std::size_t ox = 0; ox < w_out; ++ox) {
        double* row = out.row_ptr((b * h_out + oy) * w_out + ox);
        for (std::size_t ic = 0; ic < x.c; ++ic) {
          for (std::size_t ky = 0; ky < kernel_h; ++ky) {
            const std::ptrdiff_t iy =
                static_cast<std::ptrdiff_t>(oy * stride + ky) -
                static_cast<std::ptrdiff_t>(padding);
            for (std::size_t kx = 0; kx < kernel_w; ++kx) {
              const std::ptrdiff_t ix =
                  static_cast<std::ptrdiff_t>(ox * stride + kx) -
                  static_cast<std::ptrdiff_t>(padding);
              double v = 0.0;
              if (iy >= 0 && iy < static_cast<std::ptrdiff_t>(x.h) && ix >= 0 &&
                  ix < static_cast<std::ptrdiff_t>(x.w))
                v = x.at(b, ic, static_cast<std::size_t>(iy),
                         static_cast<std::size_t>(ix));
              row[ic * kernel_h * kernel_w + ky * kernel_w + kx] = v;
            }
          }
        }
      }
    }
  }
  return out;
}

TensorF64 conv2d_direct(const TensorF64& x, const TensorF64& w,
                        std::size_t stride, std::size_t padding) {
  if (x.c != w.c)
    throw ValidationError("conv2d_direct: channel mismatch " +
                          std::to_string(x.c) + " vs " + std::to_string(w.c));
  const std::size_t h_out = conv_out_dim(x.h, w.h, stride, padding);
  const std::size_t w_out = conv_out_dim(x.w, w.w, stride, padding);
  TensorF64 out(x.n, w.n, h_out, w_out, 0.0);
  for (std::size_t b = 0; b < x.n; ++b) {
    for (std::size_t oc = 0; oc < w.n; ++oc) {
      for (std::size_t oy = 0; oy < h_out; ++oy) {
        for (std::size_t ox = 0; ox < w_out; ++ox) {
          double acc = 0.0;
          for (std::size_t ic = 0; ic < x.c; ++ic) {
            for (std::size_t ky = 0; ky < w.h; ++ky) {
              const std::ptrdiff_t iy =
                  static_cast<std::ptrdiff_t>(oy * stride + ky) -
                  static_cast<std::ptrdiff_t>(padding);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(x.h)) continue;
              for (std::size_t kx = 0; kx < w.w; ++kx) {
                const std::ptrdiff_t ix =
                    static_cast<std::ptrdiff_t>(ox * stride + kx) -
                    static_cast<std::ptrdiff_t>(padding);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(x.w)) continue;
                acc += x.at(b, ic, static_cast<std::size_t>(iy),
                            static_cast<std::size_t>(ix)) *
                       w.at(oc, ic, ky, kx);
              }
            }
          }
          out.at(b, oc, oy, ox) = acc;
        }
      }
    }
  }
  return out;
}

MatrixF64 weights_as_matrix(const TensorF64& w) {
  MatrixF64 out(w.c * w.h * w.w, w.n, 0.0);
  for (std::size_t oc = 0; oc < w.n; ++oc)
    for (std::size_t ic = 0; ic < w.c; ++ic)
      for (std::size_t ky = 0; ky < w.h; ++ky)
        for (std::size_t kx = 0; kx < w.w; ++kx)
          out.at(ic * w.h * w.w + ky * w.w + kx, oc) = w.at(oc, ic, ky, kx);
  return out;
}

TensorF64 rows_to_nchw(const MatrixF64& m, std::size_t n, std::size_t c_out,
                       std::size_t h_out, std::size_t w_out) {
  if (m.rows != n * h_out * w_out || m.cols != c_out)
    throw ValidationError("rows_to_nchw: shape mismatch");
  TensorF64 out(n, c_out, h_out, w_out, 0.0);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t oy = 0; oy < h_out; ++oy)
      for (std::size_t ox = 0; ox < w_out; ++ox)
        for (std::size_t oc = 0; oc < c_out; ++oc)
          out.at(b, oc, oy, ox) = m.at((b * h_out + oy) * w_out + ox, oc);
  return out;
}

}  // namespace madlut
