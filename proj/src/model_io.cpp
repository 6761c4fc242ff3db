#include "madlut/model_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace madlut {

namespace {

constexpr unsigned char kModelMagic[5] = {0x4D, 0x41, 0x44, 0x4C, 0x01};
constexpr unsigned char kMatrixMagic[4] = {0x4D, 0x41, 0x44, 0x4D};

class Writer {
 public:
  explicit Writer(const std::string& path)
      : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw IoError("cannot open for write: " + path);
  }
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    bytes(b, 4);
  }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u32(static_cast<std::uint32_t>(bits));
    u32(static_cast<std::uint32_t>(bits >> 32));
  }
  void close() {
    out_.flush();
    if (!out_) throw IoError("write failed: " + path_);
    out_.close();
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class Reader {
 public:
  explicit Reader(const std::string& path)
      : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open: " + path);
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw IoError("truncated file: " + path_);
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    const std::uint64_t lo = u32();
    const std::uint64_t hi = u32();
    const std::uint64_t bits = lo | (hi << 32);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  bool at_eof() {
    in_.peek();
    return in_.eof();
  }

 private:
  std::ifstream in_;
  std::string path_;
};

}  // namespace

void ModelBundle::validate() const {
  if (d == 0 || m == 0 || c == 0 || k == 0 || cw == 0)
    throw ValidationError("model: all dims must be >= 1");
  if ((k & (k - 1)) != 0)
    throw ValidationError("model: k must be a power of two");
  if (subspaces.size() != c)
    throw ValidationError("model: subspace count != c");
  for (const auto& sub : subspaces)
    if (sub.size() != cw)
      throw ValidationError("model: subspace width != cw");
  pq::validate_layout(subspaces, d);
  forest.validate(subspaces);
  if (forest.k_count() != k)
    throw ValidationError("model: forest leaf count != k");
  if (lut.c_count != c || lut.k_count != k || lut.m_count != m ||
      lut.values.size() != static_cast<std::size_t>(c) * k * m)
    throw ValidationError("model: LUT dims inconsistent with header");
  if (qlut) {
    if (qlut->c_count != c || qlut->k_count != k || qlut->m_count != m ||
        qlut->scales.size() != c ||
        qlut->q_values.size() != static_cast<std::size_t>(c) * k * m)
      throw ValidationError("model: quantized LUT dims inconsistent");
  }
}

void save_model(const std::string& path, const ModelBundle& bundle) {
  bundle.validate();
  Writer w(path);
  w.bytes(kModelMagic, sizeof(kModelMagic));
  w.u32(bundle.d);
  w.u32(bundle.m);
  w.u32(bundle.c);
  w.u32(bundle.k);
  w.u32(bundle.cw);
  for (const auto& sub : bundle.subspaces)
    for (std::uint32_t idx : sub) w.u32(idx);
  for (const auto& tree : bundle.forest.trees) {
    for (std::uint32_t s : tree.split_idx) w.u32(s);
    for (double t : tree.thresholds) w.f32(static_cast<float>(t));
  }
  for (double v : bundle.lut.values) w.f32(static_cast<float>(v));
  if (bundle.qlut) {
    w.u8(1);
    for (double s : bundle.qlut->scales) w.f32(static_cast<float>(s));
    w.bytes(bundle.qlut->q_values.data(), bundle.qlut->q_values.size());
  } else {
    w.u8(0);
  }
  w.close();
}

ModelBundle load_model(const std::string& path) {
  Reader r(path);
  unsigned char magic[5];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kModelMagic, sizeof(kModelMagic)) != 0)
    throw IoError("not a MADL v1 model file: " + path);

  ModelBundle b;
  b.d = r.u32();
  b.m = r.u32();
  b.c = r.u32();
  b.k = r.u32();
  b.cw = r.u32();
  if (b.d == 0 || b.m == 0 || b.c == 0 || b.k == 0 || b.cw == 0 ||
      (b.k & (b.k - 1)) != 0)
    throw ValidationError("model load: bad header dims");

  b.subspaces.resize(b.c);
  for (auto& sub : b.subspaces) {
    sub.resize(b.cw);
    for (auto& idx : sub) idx = r.u32();
  }
  std::size_t levels = 0;
  while ((std::size_t{1} << levels) < b.k) ++levels;
  b.forest.trees.resize(b.c);
  for (auto& tree : b.forest.trees) {
    tree.levels = levels;
    tree.split_idx.resize(b.k - 1);
    for (auto& s : tree.split_idx) s = r.u32();
    tree.thresholds.resize(b.k - 1);
    for (auto& t : tree.thresholds) t = r.f32();
  }
  b.lut = pq::LookupTable(b.c, b.k, b.m);
  for (auto& v : b.lut.values) v = r.f32();
  const std::uint8_t qflag = r.u8();
  if (qflag == 1) {
    quantsim::QuantLUT q;
    q.c_count = b.c;
    q.k_count = b.k;
    q.m_count = b.m;
    q.scales.resize(b.c);
    for (auto& s : q.scales) s = r.f32();
    q.q_values.resize(static_cast<std::size_t>(b.c) * b.k * b.m);
    r.bytes(q.q_values.data(), q.q_values.size());
    b.qlut = std::move(q);
  } else if (qflag != 0) {
    throw IoError("model load: bad quantized-section flag");
  }
  if (!r.at_eof()) throw IoError("model load: trailing bytes");
  b.validate();
  return b;
}

namespace {

template <typename T>
constexpr MatrixDtype dtype_tag();
template <>
constexpr MatrixDtype dtype_tag<double>() { return MatrixDtype::f64; }
template <>
constexpr MatrixDtype dtype_tag<float>() { return MatrixDtype::f32; }
template <>
constexpr MatrixDtype dtype_tag<std::int8_t>() { return MatrixDtype::i8; }
template <>
constexpr MatrixDtype dtype_tag<std::int32_t>() { return MatrixDtype::i32; }

}  // namespace

template <typename T>
void save_matrix(const std::string& path, const DenseMatrix<T>& m) {
  Writer w(path);
  w.bytes(kMatrixMagic, sizeof(kMatrixMagic));
  w.u32(static_cast<std::uint32_t>(m.rows));
  w.u32(static_cast<std::uint32_t>(m.cols));
  w.u8(static_cast<std::uint8_t>(dtype_tag<T>()));
  if constexpr (std::is_same_v<T, double>) {
    for (double v : m.elems) w.f64(v);
  } else if constexpr (std::is_same_v<T, float>) {
    for (float v : m.elems) w.f32(v);
  } else if constexpr (std::is_same_v<T, std::int8_t>) {
    w.bytes(m.elems.data(), m.elems.size());
  } else {
    for (std::int32_t v : m.elems) w.u32(static_cast<std::uint32_t>(v));
  }
  w.close();
}

template <typename T>
DenseMatrix<T> load_matrix(const std::string& path) {
  Reader r(path);
  unsigned char magic[4];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMatrixMagic, sizeof(kMatrixMagic)) != 0)
    throw IoError("not a MADM matrix file: " + path);
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  const std::uint8_t tag = r.u8();
  if (tag != static_cast<std::uint8_t>(dtype_tag<T>()))
    throw IoError("matrix dtype mismatch in " + path);
  if (rows == 0 || cols == 0) throw ValidationError("matrix load: zero dim");
  DenseMatrix<T> m(rows, cols);
  if constexpr (std::is_same_v<T, double>) {
    for (auto& v : m.elems) v = r.f64();
  } else if constexpr (std::is_same_v<T, float>) {
    for (auto& v : m.elems) v = r.f32();
  } else if constexpr (std::is_same_v<T, std::int8_t>) {
    r.bytes(m.elems.data(), m.elems.size());
  } else {
    for (auto& v : m.elems) v = static_cast<std::int32_t>(r.u32());
  }
  if (!r.at_eof()) throw IoError("matrix load: trailing bytes");
  return m;
}

template void save_matrix<double>(const std::string&, const MatrixF64&);
template void save_matrix<float>(const std::string&, const MatrixF32&);
template void save_matrix<std::int8_t>(const std::string&, const MatrixI8&);
template void save_matrix<std::int32_t>(const std::string&, const MatrixI32&);
template MatrixF64 load_matrix<double>(const std::string&);
template MatrixF32 load_matrix<float>(const std::string&);
template MatrixI8 load_matrix<std::int8_t>(const std::string&);
template MatrixI32 load_matrix<std::int32_t>(const std::string&);

MatrixDtype peek_matrix_dtype(const std::string& path) {
  Reader r(path);
  unsigned char magic[4];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMatrixMagic, sizeof(kMatrixMagic)) != 0)
    throw IoError("not a MADM matrix file: " + path);
  r.u32();
  r.u32();
  return static_cast<MatrixDtype>(r.u8());
}

MatrixF64 load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t this_cols = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError("bad CSV number '" + cell + "' in " + path);
      }
      ++this_cols;
    }
    if (this_cols == 0) continue;
    if (cols == 0) cols = this_cols;
    if (this_cols != cols) throw IoError("ragged CSV rows in " + path);
    ++rows;
  }
  if (rows == 0) throw IoError("empty CSV matrix: " + path);
  return MatrixF64(rows, cols, std::move(values));
}

void save_matrix_csv(const std::string& path, const MatrixF64& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path);
  char buf[64];
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", m.at(r, c));
      out << buf;
      if (c + 1 < m.cols) out << ',';
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace madlut
