#pragma once

#include <cstdint>
#include <vector>

#include "madlut/matrix.hpp"
#include "madlut/pq.hpp"

namespace madlut::maddness {

/// Complete balanced binary decision tree over one codebook's subspace.
/// Internal nodes are stored level-order: node j has children 2j+1 and 2j+2;
/// leaves are numbered left to right. split_idx entries index into the
/// codebook's subspace, not the full input row.
struct HashTree {
  std::size_t levels = 0;                 // log2(leaf count)
  std::vector<std::uint32_t> split_idx;   // k - 1, level-order
  std::vector<double> thresholds;         // k - 1, level-order

  std::size_t leaf_count() const { return std::size_t{1} << levels; }
  void validate(std::size_t subspace_width) const;
};

struct HashForest {
  std::vector<HashTree> trees;  // one per codebook

  std::size_t c_count() const { return trees.size(); }
  std::size_t k_count() const {
    return trees.empty() ? 0 : trees[0].leaf_count();
  }
  void validate(const pq::SubspaceLayout& layout) const;
};

/// Root-to-leaf traversal: at node j, go left when x[split] < threshold,
/// right otherwise (equality goes right). Exactly log2(k) comparisons per
/// codebook; pass `comparisons` to count them.
pq::EncodingMatrix encode_tree(const MatrixF64& a, const HashForest& forest,
                               const pq::SubspaceLayout& layout,
                               std::size_t* comparisons = nullptr);

struct ForestModel {
  HashForest forest;
  pq::PrototypeBook book;  // leaf prototypes (bucket means)
};

/// Greedy level-by-level tree construction per codebook: each level picks one
/// split dimension shared by all of that level's buckets, with per-bucket
/// thresholds minimizing the summed within-child SSE. Threshold candidates
/// are midpoints of consecutive sorted distinct values. Leaf prototypes are
/// bucket means; empty buckets inherit their parent's mean and threshold.
ForestModel learn_forest(const MatrixF64& a_train, std::size_t c_count,
                         std::size_t k_count, std::uint64_t seed);

/// encode_tree then decode_accumulate.
MatrixF64 amm_maddness(const MatrixF64& a, const HashForest& forest,
                       const pq::SubspaceLayout& layout,
                       const pq::LookupTable& lut);

/// Contiguous-layout convenience overload (layout derived from a.cols).
MatrixF64 amm_maddness(const MatrixF64& a, const HashForest& forest,
                       const pq::LookupTable& lut);

/// im2col -> amm_maddness -> NCHW reshape. The forest must have been built
/// for d = c_in * kernel_h * kernel_w with one codebook per input channel;
/// w supplies the kernel geometry (its values live in the LUT already).
TensorF64 amm_conv2d(const TensorF64& x, const TensorF64& w,
                     const HashForest& forest, const pq::LookupTable& lut,
                     std::size_t stride, std::size_t padding);

}  // namespace madlut::maddness
