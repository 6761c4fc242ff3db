#pragma once

#include <cstdint>
#include <vector>

#include "madlut/matrix.hpp"
#include "madlut/metrics.hpp"
#include "madlut/pq.hpp"

namespace madlut::quantsim {

inline constexpr std::int32_t kAcc24Max = (1 << 23) - 1;
inline constexpr std::int32_t kAcc24Min = -(1 << 23);

/// 24-bit saturating accumulator. Clamps on every add; the sticky flag
/// latches the first time the running sum leaves the representable range.
class Acc24 {
 public:
  void add(std::int32_t delta) {
    std::int64_t s = static_cast<std::int64_t>(value_) + delta;
    if (s > kAcc24Max) {
      s = kAcc24Max;
      saturated_ = true;
    } else if (s < kAcc24Min) {
      s = kAcc24Min;
      saturated_ = true;
    }
    value_ = static_cast<std::int32_t>(s);
  }

  std::int32_t value() const { return value_; }
  bool saturated() const { return saturated_; }
  void reset() {
    value_ = 0;
    saturated_ = false;
  }

 private:
  std::int32_t value_ = 0;
  bool saturated_ = false;
};

/// Symmetric INT8 mirror of a LookupTable with one scale per codebook.
struct QuantLUT {
  std::size_t c_count = 0;
  std::size_t k_count = 0;
  std::size_t m_count = 0;
  std::vector<double> scales;      // per-codebook delta
  std::vector<std::int8_t> q_values;  // c * k * m

  std::int8_t at(std::size_t c, std::size_t k, std::size_t m) const {
    return q_values[(c * k_count + k) * m_count + m];
  }
  bool uniform_scale() const {
    for (double s : scales)
      if (s != scales[0]) return false;
    return true;
  }
};

/// Per-codebook symmetric quantization: delta_c = max|L[c]| / 127,
/// q = round-half-to-even(L / delta_c). An all-zero codebook gets delta 1.
QuantLUT quantize_lut(const pq::LookupTable& lut);

/// Same, with a single scale shared by every codebook, so the raw INT24
/// accumulator is directly meaningful.
QuantLUT quantize_lut_shared(const pq::LookupTable& lut);

struct QuantDecodeResult {
  MatrixI32 acc;       // raw INT24 view (valid as-is under a shared scale)
  MatrixF64 dequant;   // sum_c delta_c * q, accumulated in f64
  bool saturated = false;
  std::uint64_t saturation_count = 0;
};

/// Integer accumulation of LUT entries in a saturating INT24, plus the
/// dequantized float view. Requires c_count <= 2^15 so that the worst-case
/// sum of INT8 entries fits INT24.
QuantDecodeResult decode_quantized(const pq::EncodingMatrix& codes,
                                   const QuantLUT& qlut);

/// Dequantized decode vs. the float decode path.
ErrorReport quant_error_report(const pq::LookupTable& lut, const QuantLUT& qlut,
                               const pq::EncodingMatrix& codes);

}  // namespace madlut::quantsim
