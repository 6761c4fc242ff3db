#pragma once

#include <optional>
#include <string>

#include "madlut/maddness.hpp"
#include "madlut/matrix.hpp"
#include "madlut/pq.hpp"
#include "madlut/quantsim.hpp"

namespace madlut {

/// Everything a deployed model needs: subspace layout, hash forest, LUT, and
/// an optional INT8 mirror. Prototypes are a training-time object and are not
/// part of the bundle.
struct ModelBundle {
  std::uint32_t d = 0;   // input row width
  std::uint32_t m = 0;   // output columns
  std::uint32_t c = 0;   // codebooks
  std::uint32_t k = 0;   // prototypes per codebook
  std::uint32_t cw = 0;  // dims per codebook
  pq::SubspaceLayout subspaces;
  maddness::HashForest forest;
  pq::LookupTable lut;
  std::optional<quantsim::QuantLUT> qlut;

  void validate() const;
};

/// Binary "MADL" model container, version 1, little-endian:
/// magic 4D 41 44 4C 01; u32 d, m, c, k, cw; c*cw u32 subspace indices;
/// per codebook (k-1) u32 split indices then (k-1) f32 thresholds in
/// level-order; c*k*m f32 LUT; u8 quantized flag, and when set, c f32
/// scales followed by c*k*m i8 values. Thresholds and LUT entries are
/// stored in f32.
void save_model(const std::string& path, const ModelBundle& bundle);
ModelBundle load_model(const std::string& path);

/// Binary "MADM" matrix container: magic 4D 41 44 4D; u32 rows, u32 cols,
/// u8 dtype tag (0 = f64, 1 = f32, 2 = i8, 3 = i32); raw little-endian
/// payload.
enum class MatrixDtype : std::uint8_t { f64 = 0, f32 = 1, i8 = 2, i32 = 3 };

template <typename T>
void save_matrix(const std::string& path, const DenseMatrix<T>& m);

template <typename T>
DenseMatrix<T> load_matrix(const std::string& path);

MatrixDtype peek_matrix_dtype(const std::string& path);

/// Plain-text import/export for small hand-made cases: one row per line,
/// comma-separated values.
MatrixF64 load_matrix_csv(const std::string& path);
void save_matrix_csv(const std::string& path, const MatrixF64& m);

}  // namespace madlut
