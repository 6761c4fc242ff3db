#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "madlut/matrix.hpp"

namespace madlut::pq {

/// Column index sets, one per codebook. All sets have equal width and are
/// pairwise disjoint.
using SubspaceLayout = std::vector<std::vector<std::uint32_t>>;

/// Default layout: contiguous blocks of width d / c. Rejects d % c != 0.
SubspaceLayout contiguous_subspaces(std::size_t d, std::size_t c);

void validate_layout(const SubspaceLayout& layout, std::size_t d);

/// Learned prototypes, c_count x k_count x dims_per_codebook.
struct PrototypeBook {
  std::size_t c_count = 0;
  std::size_t k_count = 0;
  std::size_t dims_per_codebook = 0;
  SubspaceLayout subspaces;
  std::vector<double> protos;      // c * k * dims
  std::vector<std::uint8_t> degenerate;  // per-codebook: fewer distinct
                                         // subvectors than k seen in training

  double& proto_at(std::size_t c, std::size_t k, std::size_t i) {
    return protos[(c * k_count + k) * dims_per_codebook + i];
  }
  double proto_at(std::size_t c, std::size_t k, std::size_t i) const {
    return protos[(c * k_count + k) * dims_per_codebook + i];
  }
  bool any_degenerate() const {
    for (auto f : degenerate)
      if (f) return true;
    return false;
  }
};

/// Per-row, per-codebook prototype indices, each in [0, k_count).
struct EncodingMatrix {
  std::size_t n_rows = 0;
  std::size_t c_count = 0;
  std::size_t k_count = 0;
  std::vector<std::uint32_t> codes;  // n * c

  EncodingMatrix() = default;
  EncodingMatrix(std::size_t n, std::size_t c, std::size_t k)
      : n_rows(n), c_count(c), k_count(k), codes(n * c, 0) {}

  std::uint32_t& at(std::size_t n, std::size_t c) {
    return codes[n * c_count + c];
  }
  std::uint32_t at(std::size_t n, std::size_t c) const {
    return codes[n * c_count + c];
  }
  bool operator==(const EncodingMatrix& o) const {
    return n_rows == o.n_rows && c_count == o.c_count && codes == o.codes;
  }
};

/// Offline prototype-times-weights table, c_count x k_count x m_count.
struct LookupTable {
  std::size_t c_count = 0;
  std::size_t k_count = 0;
  std::size_t m_count = 0;
  std::vector<double> values;  // c * k * m

  LookupTable() = default;
  LookupTable(std::size_t c, std::size_t k, std::size_t m)
      : c_count(c), k_count(k), m_count(m), values(c * k * m, 0.0) {}

  double& at(std::size_t c, std::size_t k, std::size_t m) {
    return values[(c * k_count + k) * m_count + m];
  }
  double at(std::size_t c, std::size_t k, std::size_t m) const {
    return values[(c * k_count + k) * m_count + m];
  }
};

/// k-means++ seeding over n points of dimension dim (row-major `points`).
/// Exposed so an independent Lloyd's run can start from identical centers.
std::vector<double> kmeans_plus_plus_init(const std::vector<double>& points,
                                          std::size_t n, std::size_t dim,
                                          std::size_t k, std::mt19937_64& rng);

/// RNG used for codebook c when learning with `seed`.
std::mt19937_64 codebook_rng(std::uint64_t seed, std::size_t c);

/// Per-subspace Lloyd's k-means with k-means++ init. Deterministic given
/// seed. Ties in the assignment go to the lowest index; empty clusters are
/// re-seeded from the point farthest from its centroid. If
/// objective_history is given, the sum-of-squared-error objective is
/// appended once per iteration (non-increasing).
PrototypeBook learn_prototypes(const MatrixF64& a_train, std::size_t c_count,
                               std::size_t k_count, std::uint64_t seed,
                               std::size_t max_iters = 100, double tol = 1e-10,
                               std::vector<double>* objective_history = nullptr);

/// l2 argmin encoding: codes[n][c] = argmin_k sum_i (a[n][i] - P[c][k][i])^2.
EncodingMatrix encode_pq(const MatrixF64& a, const PrototypeBook& book);

/// L[c][k][m] = sum_{i in subspace c} b[i][m] * P[c][k][i].
LookupTable build_lut(const MatrixF64& b, const PrototypeBook& book);

/// out[n][m] = sum_c L[c][codes[n][c]][m].
MatrixF64 decode_accumulate(const EncodingMatrix& codes, const LookupTable& lut);

}  // namespace madlut::pq
