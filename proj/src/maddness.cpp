#include "madlut/maddness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "madlut/im2col.hpp"

namespace madlut::maddness {

void HashTree::validate(std::size_t subspace_width) const {
  if (levels == 0) throw ValidationError("HashTree: need at least one level");
  const std::size_t internal = leaf_count() - 1;
  if (split_idx.size() != internal || thresholds.size() != internal)
    throw ValidationError("HashTree: expected " + std::to_string(internal) +
                          " internal nodes");
  for (std::uint32_t s : split_idx)
    if (s >= subspace_width)
      throw ValidationError("HashTree: split index outside subspace");
}

void HashForest::validate(const pq::SubspaceLayout& layout) const {
  if (trees.empty()) throw ValidationError("HashForest: no trees");
  if (layout.size() != trees.size())
    throw ValidationError("HashForest: layout/tree count mismatch");
  for (std::size_t c = 0; c < trees.size(); ++c) {
    if (trees[c].levels != trees[0].levels)
      throw ValidationError("HashForest: trees disagree on leaf count");
    trees[c].validate(layout[c].size());
  }
}

pq::EncodingMatrix encode_tree(const MatrixF64& a, const HashForest& forest,
                               const pq::SubspaceLayout& layout,
                               std::size_t* comparisons) {
  forest.validate(layout);
  pq::validate_layout(layout, a.cols);
  const std::size_t k = forest.k_count();
  pq::EncodingMatrix codes(a.rows, forest.c_count(), k);
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t c = 0; c < forest.c_count(); ++c) {
      const HashTree& tree = forest.trees[c];
      std::size_t node = 0;
      for (std::size_t level = 0; level < tree.levels; ++level) {
        const double v = a.at(i, layout[c][tree.split_idx[node]]);
        const bool left = v < tree.thresholds[node];
        ++count;
        node = 2 * node + (left ? 1 : 2);
      }
      codes.at(i, c) = static_cast<std::uint32_t>(node - (k - 1));
    }
  }
  if (comparisons) *comparisons = count;
  return codes;
}

namespace {

struct Bucket {
  std::vector<std::size_t> rows;
  std::vector<double> carry_mean;  // stands in for the mean when rows empty
  double carry_threshold = 0.0;
};

struct SplitEval {
  double loss = 0.0;
  double threshold = 0.0;
  bool splits = false;
};

double sse_part(const std::vector<double>& sum, const std::vector<double>& sq,
                std::size_t count) {
  if (count == 0) return 0.0;
  double sse = 0.0;
  for (std::size_t d = 0; d < sum.size(); ++d) {
    const double v = sq[d] - sum[d] * sum[d] / static_cast<double>(count);
    if (v > 0.0) sse += v;
  }
  return sse;
}

// Best threshold on `dim` for this bucket: midpoints of consecutive distinct
// sorted values, scored by the summed SSE of the two children over the whole
// subspace. Degenerate buckets (one distinct value) do not split; the
// threshold equals that value, which routes every row right.
SplitEval best_split(const std::vector<double>& sub, std::size_t cw,
                     const std::vector<std::size_t>& rows, std::size_t dim) {
  SplitEval ev;
  const std::size_t nb = rows.size();
  std::vector<std::size_t> order(rows);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double va = sub[a * cw + dim], vb = sub[b * cw + dim];
    return va < vb || (va == vb && a < b);
  });

  std::vector<double> tot_sum(cw, 0.0), tot_sq(cw, 0.0);
  for (std::size_t r : order)
    for (std::size_t d = 0; d < cw; ++d) {
      const double v = sub[r * cw + d];
      tot_sum[d] += v;
      tot_sq[d] += v * v;
    }
  const double full = sse_part(tot_sum, tot_sq, nb);

  const double lo = sub[order.front() * cw + dim];
  const double hi = sub[order.back() * cw + dim];
  if (lo == hi) {
    ev.threshold = lo;
    ev.loss = full;
    return ev;
  }

  std::vector<double> left_sum(cw, 0.0), left_sq(cw, 0.0);
  std::vector<double> right_sum, right_sq;
  double best = std::numeric_limits<double>::infinity();
  double best_thr = lo;
  for (std::size_t s = 1; s < nb; ++s) {
    const std::size_t r = order[s - 1];
    for (std::size_t d = 0; d < cw; ++d) {
      const double v = sub[r * cw + d];
      left_sum[d] += v;
      left_sq[d] += v * v;
    }
    const double v_prev = sub[order[s - 1] * cw + dim];
    const double v_cur = sub[order[s] * cw + dim];
    if (v_prev == v_cur) continue;
    right_sum = tot_sum;
    right_sq = tot_sq;
    for (std::size_t d = 0; d < cw; ++d) {
      right_sum[d] -= left_sum[d];
      right_sq[d] -= left_sq[d];
    }
    const double loss =
        sse_part(left_sum, left_sq, s) + sse_part(right_sum, right_sq, nb - s);
    if (loss < best) {
      best = loss;
      best_thr = 0.5 * (v_prev + v_cur);
    }
  }
  ev.splits = true;
  ev.loss = best;
  ev.threshold = best_thr;
  return ev;
}

std::vector<double> bucket_mean(const std::vector<double>& sub, std::size_t cw,
                                const Bucket& b) {
  if (b.rows.empty()) return b.carry_mean;
  std::vector<double> mean(cw, 0.0);
  for (std::size_t r : b.rows)
    for (std::size_t d = 0; d < cw; ++d) mean[d] += sub[r * cw + d];
  for (double& v : mean) v /= static_cast<double>(b.rows.size());
  return mean;
}

}  // namespace

ForestModel learn_forest(const MatrixF64& a_train, std::size_t c_count,
                         std::size_t k_count, std::uint64_t seed) {
  (void)seed;  // the greedy scan is fully deterministic
  if (k_count < 2 || (k_count & (k_count - 1)) != 0)
    throw ValidationError("learn_forest: k must be a power of two >= 2");
  if (a_train.rows < k_count)
    throw ValidationError("learn_forest: need at least k training rows");

  ForestModel model;
  model.book.c_count = c_count;
  model.book.k_count = k_count;
  model.book.subspaces = pq::contiguous_subspaces(a_train.cols, c_count);
  model.book.dims_per_codebook = model.book.subspaces[0].size();
  model.book.protos.assign(c_count * k_count * model.book.dims_per_codebook,
                           0.0);
  model.book.degenerate.assign(c_count, 0);
  model.forest.trees.resize(c_count);

  std::size_t levels = 0;
  while ((std::size_t{1} << levels) < k_count) ++levels;

  const std::size_t n = a_train.rows;
  const std::size_t cw = model.book.dims_per_codebook;
  std::vector<double> sub(n * cw);

  for (std::size_t c = 0; c < c_count; ++c) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < cw; ++d)
        sub[i * cw + d] = a_train.at(i, model.book.subspaces[c][d]);

    HashTree& tree = model.forest.trees[c];
    tree.levels = levels;
    tree.split_idx.assign(k_count - 1, 0);
    tree.thresholds.assign(k_count - 1, 0.0);

    std::vector<Bucket> buckets(1);
    buckets[0].rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) buckets[0].rows[i] = i;

    for (std::size_t level = 0; level < levels; ++level) {
      // pick the dimension this level shares across its buckets
      std::size_t best_dim = 0;
      double best_total = std::numeric_limits<double>::infinity();
      std::vector<std::vector<SplitEval>> evals(
          cw, std::vector<SplitEval>(buckets.size()));
      for (std::size_t dim = 0; dim < cw; ++dim) {
        double total = 0.0;
        for (std::size_t b = 0; b < buckets.size(); ++b) {
          if (buckets[b].rows.empty()) continue;
          evals[dim][b] = best_split(sub, cw, buckets[b].rows, dim);
          total += evals[dim][b].loss;
        }
        if (total < best_total) {
          best_total = total;
          best_dim = dim;
        }
      }

      std::vector<Bucket> next(buckets.size() * 2);
      for (std::size_t b = 0; b < buckets.size(); ++b) {
        const std::size_t node = ((std::size_t{1} << level) - 1) + b;
        Bucket& left = next[2 * b];
        Bucket& right = next[2 * b + 1];
        double threshold;
        if (buckets[b].rows.empty()) {
          threshold = buckets[b].carry_threshold;
          left.carry_mean = buckets[b].carry_mean;
          right.carry_mean = buckets[b].carry_mean;
          left.carry_threshold = right.carry_threshold = threshold;
        } else {
          const SplitEval& ev = evals[best_dim][b];
          threshold = ev.threshold;
          for (std::size_t r : buckets[b].rows) {
            if (sub[r * cw + best_dim] < threshold)
              left.rows.push_back(r);
            else
              right.rows.push_back(r);
          }
          const auto mean = bucket_mean(sub, cw, buckets[b]);
          for (Bucket* child : {&left, &right}) {
            if (child->rows.empty()) {
              child->carry_mean = mean;
              child->carry_threshold = threshold;
            }
          }
        }
        tree.split_idx[node] = static_cast<std::uint32_t>(best_dim);
        tree.thresholds[node] = threshold;
      }
      buckets = std::move(next);
    }

    for (std::size_t leaf = 0; leaf < k_count; ++leaf) {
      const auto mean = bucket_mean(sub, cw, buckets[leaf]);
      for (std::size_t d = 0; d < cw; ++d)
        model.book.proto_at(c, leaf, d) = mean[d];
    }
  }
  return model;
}

MatrixF64 amm_maddness(const MatrixF64& a, const HashForest& forest,
                       const pq::SubspaceLayout& layout,
                       const pq::LookupTable& lut) {
  return pq::decode_accumulate(encode_tree(a, forest, layout), lut);
}

MatrixF64 amm_maddness(const MatrixF64& a, const HashForest& forest,
                       const pq::LookupTable& lut) {
  return amm_maddness(a, forest,
                      pq::contiguous_subspaces(a.cols, forest.c_count()), lut);
}

TensorF64 amm_conv2d(const TensorF64& x, const TensorF64& w,
                     const HashForest& forest, const pq::LookupTable& lut,
                     std::size_t stride, std::size_t padding) {
  if (x.c != w.c) throw ValidationError("amm_conv2d: channel mismatch");
  if (forest.c_count() != x.c)
    throw ValidationError("amm_conv2d: expected one codebook per input channel");
  if (lut.m_count != w.n)
    throw ValidationError("amm_conv2d: LUT output count != output channels");
  const MatrixF64 lowered = im2col(x, w.h, w.w, stride, padding);
  const MatrixF64 approx = amm_maddness(lowered, forest, lut);
  return rows_to_nchw(approx, x.n, w.n, conv_out_dim(x.h, w.h, stride, padding),
                      conv_out_dim(x.w, w.w, stride, padding));
}

}  // namespace madlut::maddness
