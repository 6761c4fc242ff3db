#include "madlut/pq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace madlut::pq {

SubspaceLayout contiguous_subspaces(std::size_t d, std::size_t c) {
  if (c < 1 || d < 1) throw ValidationError("subspaces: d and c must be >= 1");
  if (d % c != 0)
    throw ValidationError("subspaces: d = " + std::to_string(d) +
                          " not divisible by c = " + std::to_string(c));
  const std::size_t cw = d / c;
  SubspaceLayout layout(c);
  for (std::size_t ci = 0; ci < c; ++ci) {
    layout[ci].resize(cw);
    for (std::size_t i = 0; i < cw; ++i)
      layout[ci][i] = static_cast<std::uint32_t>(ci * cw + i);
  }
  return layout;
}

void validate_layout(const SubspaceLayout& layout, std::size_t d) {
  if (layout.empty()) throw ValidationError("layout: no codebooks");
  const std::size_t cw = layout[0].size();
  std::set<std::uint32_t> seen;
  for (const auto& sub : layout) {
    if (sub.size() != cw) throw ValidationError("layout: unequal widths");
    for (std::uint32_t idx : sub) {
      if (idx >= d) throw ValidationError("layout: column index out of range");
      if (!seen.insert(idx).second)
        throw ValidationError("layout: subspaces not disjoint");
    }
  }
}

std::mt19937_64 codebook_rng(std::uint64_t seed, std::size_t c) {
  return std::mt19937_64(seed + 0x9E3779B97F4A7C15ull * (c + 1));
}

namespace {

double sq_dist(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

std::vector<double> kmeans_plus_plus_init(const std::vector<double>& points,
                                          std::size_t n, std::size_t dim,
                                          std::size_t k, std::mt19937_64& rng) {
  std::vector<double> centers(k * dim, 0.0);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  const std::size_t f = first(rng);
  std::copy_n(points.data() + f * dim, dim, centers.data());

  std::vector<double> best_d2(n, std::numeric_limits<double>::infinity());
  for (std::size_t next = 1; next < k; ++next) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d2 =
          sq_dist(points.data() + i * dim, centers.data() + (next - 1) * dim, dim);
      if (d2 < best_d2[i]) best_d2[i] = d2;
      total += best_d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (std::size_t i = 0; i < n; ++i) {
        target -= best_d2[i];
        if (target <= 0.0) {
          pick = i;
          break;
        }
        pick = i;  // fall through to last point on rounding leftovers
      }
    } else {
      // all points coincide with a chosen center; duplicate deterministically
      pick = f;
    }
    std::copy_n(points.data() + pick * dim, dim, centers.data() + next * dim);
  }
  return centers;
}

namespace {

// One Lloyd's run over n x dim points. Centers are updated in place;
// returns per-iteration objective values.
std::vector<double> lloyd(const std::vector<double>& points, std::size_t n,
                          std::size_t dim, std::size_t k,
                          std::vector<double>& centers, std::size_t max_iters,
                          double tol) {
  std::vector<std::size_t> assign(n, 0);
  std::vector<double> history;
  double prev_obj = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    // assignment step; ties go to the lowest index
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_k = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d2 =
            sq_dist(points.data() + i * dim, centers.data() + c * dim, dim);
        if (d2 < best) {
          best = d2;
          best_k = c;
        }
      }
      assign[i] = best_k;
      obj += best;
    }
    history.push_back(obj);

    // update step
    std::vector<double> sums(k * dim, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      counts[assign[i]]++;
      for (std::size_t d = 0; d < dim; ++d)
        sums[assign[i] * dim + d] += points[i * dim + d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t d = 0; d < dim; ++d)
          centers[c * dim + d] = sums[c * dim + d] / counts[c];
      } else {
        // empty cluster: re-seed from the point farthest from its centroid
        double worst = -1.0;
        std::size_t worst_i = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d2 = sq_dist(points.data() + i * dim,
                                    centers.data() + assign[i] * dim, dim);
          if (d2 > worst) {
            worst = d2;
            worst_i = i;
          }
        }
        std::copy_n(points.data() + worst_i * dim, dim, centers.data() + c * dim);
      }
    }

    if (prev_obj - obj <= tol * std::max(1.0, std::fabs(prev_obj)) &&
        iter > 0)
      break;
    prev_obj = obj;
  }
  return history;
}

}  // namespace

PrototypeBook learn_prototypes(const MatrixF64& a_train, std::size_t c_count,
                               std::size_t k_count, std::uint64_t seed,
                               std::size_t max_iters, double tol,
                               std::vector<double>* objective_history) {
  if (k_count < 1) throw ValidationError("learn_prototypes: k must be >= 1");
  if (a_train.rows < k_count)
    throw ValidationError("learn_prototypes: need at least k training rows");
  PrototypeBook book;
  book.c_count = c_count;
  book.k_count = k_count;
  book.subspaces = contiguous_subspaces(a_train.cols, c_count);
  book.dims_per_codebook = book.subspaces[0].size();
  book.protos.assign(c_count * k_count * book.dims_per_codebook, 0.0);
  book.degenerate.assign(c_count, 0);

  const std::size_t n = a_train.rows;
  const std::size_t cw = book.dims_per_codebook;
  std::vector<double> sub(n * cw);
  std::vector<std::vector<double>> histories(c_count);
  for (std::size_t c = 0; c < c_count; ++c) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < cw; ++d)
        sub[i * cw + d] = a_train.at(i, book.subspaces[c][d]);

    // degenerate when fewer distinct subvectors than clusters
    std::set<std::vector<double>> distinct;
    for (std::size_t i = 0; i < n && distinct.size() < k_count; ++i)
      distinct.insert(std::vector<double>(sub.begin() + i * cw,
                                          sub.begin() + (i + 1) * cw));
    if (distinct.size() < k_count) book.degenerate[c] = 1;

    auto rng = codebook_rng(seed, c);
    std::vector<double> centers =
        kmeans_plus_plus_init(sub, n, cw, k_count, rng);
    histories[c] = lloyd(sub, n, cw, k_count, centers, max_iters, tol);
    std::copy(centers.begin(), centers.end(),
              book.protos.begin() + c * k_count * cw);
  }
  if (objective_history) {
    // total objective across subspaces per iteration; codebooks that stopped
    // early contribute their converged value
    std::size_t len = 0;
    for (const auto& h : histories) len = std::max(len, h.size());
    objective_history->assign(len, 0.0);
    for (const auto& h : histories)
      for (std::size_t t = 0; t < len; ++t)
        (*objective_history)[t] += t < h.size() ? h[t] : h.back();
  }
  return book;
}

EncodingMatrix encode_pq(const MatrixF64& a, const PrototypeBook& book) {
  for (const auto& sub : book.subspaces)
    for (std::uint32_t idx : sub)
      if (idx >= a.cols)
        throw ValidationError("encode_pq: column index out of range");
  EncodingMatrix codes(a.rows, book.c_count, book.k_count);
  const std::size_t cw = book.dims_per_codebook;
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t c = 0; c < book.c_count; ++c) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_k = 0;
      for (std::size_t k = 0; k < book.k_count; ++k) {
        double d2 = 0.0;
        for (std::size_t d = 0; d < cw; ++d) {
          const double diff =
              a.at(i, book.subspaces[c][d]) - book.proto_at(c, k, d);
          d2 += diff * diff;
        }
        if (d2 < best) {  // strict: ties keep the lowest k
          best = d2;
          best_k = k;
        }
      }
      codes.at(i, c) = static_cast<std::uint32_t>(best_k);
    }
  }
  return codes;
}

LookupTable build_lut(const MatrixF64& b, const PrototypeBook& book) {
  for (const auto& sub : book.subspaces)
    for (std::uint32_t idx : sub)
      if (idx >= b.rows)
        throw ValidationError("build_lut: b has fewer rows than subspace span");
  LookupTable lut(book.c_count, book.k_count, b.cols);
  for (std::size_t c = 0; c < book.c_count; ++c)
    for (std::size_t k = 0; k < book.k_count; ++k)
      for (std::size_t m = 0; m < b.cols; ++m) {
        double acc = 0.0;
        for (std::size_t d = 0; d < book.dims_per_codebook; ++d)
          acc += b.at(book.subspaces[c][d], m) * book.proto_at(c, k, d);
        lut.at(c, k, m) = acc;
      }
  return lut;
}

MatrixF64 decode_accumulate(const EncodingMatrix& codes, const LookupTable& lut) {
  if (codes.c_count != lut.c_count)
    throw ValidationError("decode_accumulate: codebook count mismatch");
  MatrixF64 out(codes.n_rows, lut.m_count, 0.0);
  for (std::size_t n = 0; n < codes.n_rows; ++n) {
    double* orow = out.row_ptr(n);
    for (std::size_t c = 0; c < codes.c_count; ++c) {
      const std::uint32_t k = codes.at(n, c);
      if (k >= lut.k_count)
        throw ValidationError("decode_accumulate: code out of range");
      const double* lrow = &lut.values[(c * lut.k_count + k) * lut.m_count];
      for (std::size_t m = 0; m < lut.m_count; ++m) orow[m] += lrow[m];
    }
  }
  return out;
}

}  // namespace madlut::pq
