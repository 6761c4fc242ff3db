#include "madlut/quantsim.hpp"

#include <cmath>

namespace madlut::quantsim {

namespace {

std::int8_t quantize_value(double v, double delta) {
  // nearbyint under the default FP environment rounds half to even
  double q = std::nearbyint(v / delta);
  if (q > 127.0) q = 127.0;
  if (q < -127.0) q = -127.0;
  return static_cast<std::int8_t>(q);
}

QuantLUT quantize_with_scales(const pq::LookupTable& lut,
                              std::vector<double> scales) {
  QuantLUT out;
  out.c_count = lut.c_count;
  out.k_count = lut.k_count;
  out.m_count = lut.m_count;
  out.scales = std::move(scales);
  out.q_values.resize(lut.values.size());
  for (std::size_t c = 0; c < lut.c_count; ++c) {
    const std::size_t base = c * lut.k_count * lut.m_count;
    for (std::size_t i = 0; i < lut.k_count * lut.m_count; ++i)
      out.q_values[base + i] = quantize_value(lut.values[base + i], out.scales[c]);
  }
  return out;
}

double codebook_abs_max(const pq::LookupTable& lut, std::size_t c) {
  double m = 0.0;
  const std::size_t base = c * lut.k_count * lut.m_count;
  for (std::size_t i = 0; i < lut.k_count * lut.m_count; ++i)
    m = std::max(m, std::fabs(lut.values[base + i]));
  return m;
}

}  // namespace

QuantLUT quantize_lut(const pq::LookupTable& lut) {
  for (double v : lut.values)
    if (!std::isfinite(v)) throw ValidationError("quantize_lut: non-finite LUT");
  std::vector<double> scales(lut.c_count, 1.0);
  for (std::size_t c = 0; c < lut.c_count; ++c) {
    const double m = codebook_abs_max(lut, c);
    scales[c] = m > 0.0 ? m / 127.0 : 1.0;
  }
  return quantize_with_scales(lut, std::move(scales));
}

QuantLUT quantize_lut_shared(const pq::LookupTable& lut) {
  for (double v : lut.values)
    if (!std::isfinite(v)) throw ValidationError("quantize_lut: non-finite LUT");
  double m = 0.0;
  for (std::size_t c = 0; c < lut.c_count; ++c)
    m = std::max(m, codebook_abs_max(lut, c));
  const double delta = m > 0.0 ? m / 127.0 : 1.0;
  return quantize_with_scales(lut, std::vector<double>(lut.c_count, delta));
}

QuantDecodeResult decode_quantized(const pq::EncodingMatrix& codes,
                                   const QuantLUT& qlut) {
  if (codes.c_count != qlut.c_count)
    throw ValidationError("decode_quantized: codebook count mismatch");
  if (qlut.c_count > (std::size_t{1} << 15))
    throw ValidationError(
        "decode_quantized: c_count > 2^15 may overflow the INT24 accumulator");

  QuantDecodeResult res;
  res.acc = MatrixI32(codes.n_rows, qlut.m_count, 0);
  res.dequant = MatrixF64(codes.n_rows, qlut.m_count, 0.0);
  std::vector<Acc24> accs(qlut.m_count);
  for (std::size_t n = 0; n < codes.n_rows; ++n) {
    for (auto& a : accs) a.reset();
    double* drow = res.dequant.row_ptr(n);
    for (std::size_t c = 0; c < codes.c_count; ++c) {
      const std::uint32_t k = codes.at(n, c);
      if (k >= qlut.k_count)
        throw ValidationError("decode_quantized: code out of range");
      const std::int8_t* qrow =
          &qlut.q_values[(c * qlut.k_count + k) * qlut.m_count];
      const double delta = qlut.scales[c];
      for (std::size_t m = 0; m < qlut.m_count; ++m) {
        accs[m].add(qrow[m]);
        drow[m] += delta * qrow[m];
      }
    }
    std::int32_t* irow = res.acc.row_ptr(n);
    for (std::size_t m = 0; m < qlut.m_count; ++m) {
      irow[m] = accs[m].value();
      if (accs[m].saturated()) {
        res.saturated = true;
        res.saturation_count++;
      }
    }
  }
  return res;
}

ErrorReport quant_error_report(const pq::LookupTable& lut, const QuantLUT& qlut,
                               const pq::EncodingMatrix& codes) {
  const MatrixF64 exact = pq::decode_accumulate(codes, lut);
  const QuantDecodeResult q = decode_quantized(codes, qlut);
  return frobenius_error(q.dequant, exact);
}

}  // namespace madlut::quantsim
