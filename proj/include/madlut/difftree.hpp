#pragma once

#include <cstdint>
#include <vector>

#include "madlut/maddness.hpp"
#include "madlut/matrix.hpp"
#include "madlut/model_io.hpp"
#include "madlut/pq.hpp"

namespace madlut::difftree {

/// Matrix form of a hash forest. Per codebook: a one-hot selection matrix S
/// of shape (k-1) x levels routing each tree node to one of the levels input
/// slots, a ternary description matrix H of shape k x (k-1) carrying the
/// root-to-leaf path signs, the threshold vector theta of length k-1, and
/// dim_select mapping the input slots to global input columns. Codebooks
/// compose block-diagonally; the blocks are stored side by side.
struct TreeMatrices {
  std::size_t c_count = 0;
  std::size_t k_count = 0;
  std::size_t levels = 0;
  std::vector<std::uint8_t> s;        // c * (k-1) * levels, one-hot rows
  std::vector<std::int8_t> h;         // c * k * (k-1), entries in {-1,0,1}
  std::vector<double> theta;          // c * (k-1)
  std::vector<std::uint32_t> dim_select;  // c * levels, global columns

  std::uint8_t s_at(std::size_t c, std::size_t node, std::size_t slot) const {
    return s[(c * (k_count - 1) + node) * levels + slot];
  }
  std::int8_t h_at(std::size_t c, std::size_t leaf, std::size_t node) const {
    return h[(c * k_count + leaf) * (k_count - 1) + node];
  }
  double theta_at(std::size_t c, std::size_t node) const {
    return theta[c * (k_count - 1) + node];
  }
  std::uint32_t dim_at(std::size_t c, std::size_t slot) const {
    return dim_select[c * levels + slot];
  }
};

/// Softening knobs for the backward-pass surrogate. The hard forward path
/// never sees them.
struct SoftParams {
  double temperature = 1.0;  // divides the softmax logits
  double slope = 1.0;        // scales the tanh argument
};

/// Soft assignments, n x c x k; each (n, c) row is a probability vector.
struct SoftAssign {
  std::size_t n_rows = 0;
  std::size_t c_count = 0;
  std::size_t k_count = 0;
  std::vector<double> p;

  double at(std::size_t n, std::size_t c, std::size_t k) const {
    return p[(n * c_count + c) * k_count + k];
  }
  double& at(std::size_t n, std::size_t c, std::size_t k) {
    return p[(n * c_count + c) * k_count + k];
  }
};

/// Builds (S, H, theta, dim_select) from a balanced forest. Requires each
/// tree to use at most `levels` distinct split dimensions (slots are
/// assigned in order of first appearance in level-order). Round-trippable:
/// encode_hard on the result equals encode_tree on the forest everywhere.
TreeMatrices from_forest(const maddness::HashForest& forest,
                         const pq::SubspaceLayout& layout);

/// Writes theta back into a forest with the same shape (the inverse of the
/// threshold part of from_forest).
void apply_thresholds(const TreeMatrices& tm, maddness::HashForest& forest);

/// Hard encoding: argmax_leaf H * sign(S x - theta) per codebook, with
/// sign(0) := +1 so ties on a threshold go right, exactly like the tree
/// rule. The winning leaf always scores log2(k).
pq::EncodingMatrix encode_hard(const TreeMatrices& tm, const MatrixF64& x_rows);

/// Soft encoding used only for gradients:
/// softmax_k((1/temperature) * H tanh(slope * (S x - theta))).
SoftAssign encode_soft(const TreeMatrices& tm, const SoftParams& sp,
                       const MatrixF64& x_rows);

/// Hard one-hot forward; numerically identical to maddness::amm_maddness for
/// the matching forest and LUT.
MatrixF64 amm_ste_forward(const TreeMatrices& tm, const pq::LookupTable& lut,
                          const MatrixF64& x_rows);

struct SteGradients {
  std::vector<double> d_lut;    // c * k * m, exact via the hard path
  std::vector<double> d_theta;  // c * (k-1), via the soft surrogate
};

/// Straight-through backward: the LUT gradient flows through the hard
/// one-hot encoding (exact, linear); the threshold gradient substitutes the
/// soft assignment and differentiates softmax(H tanh(.)) analytically.
SteGradients amm_ste_backward(const TreeMatrices& tm, const SoftParams& sp,
                              const pq::LookupTable& lut, const MatrixF64& x_rows,
                              const MatrixF64& upstream_grad);

/// Loss value of the soft-relaxed forward under a fixed upstream weighting:
/// sum_{n,m} upstream[n][m] * (sum_{c,k} E_soft[n][c][k] * L[c][k][m]).
/// This is the scalar that d_theta differentiates; exposed for numeric
/// gradient checking.
double soft_weighted_output(const TreeMatrices& tm, const SoftParams& sp,
                            const pq::LookupTable& lut, const MatrixF64& x_rows,
                            const MatrixF64& upstream_grad);

/// Desk-scale task for the fine-tuning loop. Regression targets are n x m;
/// classification targets are n x 1 integer labels in [0, m).
struct ToyDataset {
  MatrixF64 inputs;
  MatrixF64 targets;
  bool classification = false;
};

struct FinetuneOptions {
  std::size_t epochs = 50;
  double lr = 1e-2;
  double lr_theta_scale = 0.5;  // thresholds train at half the rate
  double lr_min = 0.0;          // cosine annealing floor
  SoftParams soft;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  double rel_frobenius = 0.0;
};

struct FinetuneResult {
  ModelBundle model;
  std::vector<EpochMetrics> history;
};

/// Full-batch gradient descent on the LUT and thresholds with a cosine
/// annealed learning rate. Throws NumericalError if the loss diverges to
/// NaN.
FinetuneResult finetune_toy(const ModelBundle& model, const ToyDataset& dataset,
                            const FinetuneOptions& opts);

}  // namespace madlut::difftree
