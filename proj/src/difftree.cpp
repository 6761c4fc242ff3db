#include "madlut/difftree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "madlut/metrics.hpp"

namespace madlut::difftree {

TreeMatrices from_forest(const maddness::HashForest& forest,
                         const pq::SubspaceLayout& layout) {
  forest.validate(layout);
  TreeMatrices tm;
  tm.c_count = forest.c_count();
  tm.k_count = forest.k_count();
  std::size_t levels = 0;
  while ((std::size_t{1} << levels) < tm.k_count) ++levels;
  tm.levels = levels;
  const std::size_t internal = tm.k_count - 1;
  tm.s.assign(tm.c_count * internal * levels, 0);
  tm.h.assign(tm.c_count * tm.k_count * internal, 0);
  tm.theta.assign(tm.c_count * internal, 0.0);
  tm.dim_select.assign(tm.c_count * levels, 0);

  for (std::size_t c = 0; c < tm.c_count; ++c) {
    const maddness::HashTree& tree = forest.trees[c];
    // slots in order of first appearance of each distinct split dimension
    std::map<std::uint32_t, std::size_t> slot_of;
    for (std::size_t j = 0; j < internal; ++j) {
      const std::uint32_t dim = tree.split_idx[j];
      auto it = slot_of.find(dim);
      std::size_t slot;
      if (it == slot_of.end()) {
        slot = slot_of.size();
        if (slot >= levels)
          throw ValidationError(
              "from_forest: tree uses more than log2(k) distinct split dims");
        slot_of.emplace(dim, slot);
        tm.dim_select[c * levels + slot] = layout[c][dim];
      } else {
        slot = it->second;
      }
      tm.s[(c * internal + j) * levels + slot] = 1;
      tm.theta[c * internal + j] = tree.thresholds[j];
    }
    // unused slots repeat the first selected column
    for (std::size_t slot = slot_of.size(); slot < levels; ++slot)
      tm.dim_select[c * levels + slot] = tm.dim_select[c * levels];

    for (std::size_t leaf = 0; leaf < tm.k_count; ++leaf) {
      std::size_t node = 0;
      for (std::size_t level = 0; level < levels; ++level) {
        const std::size_t bit = (leaf >> (levels - 1 - level)) & 1u;
        tm.h[(c * tm.k_count + leaf) * internal + node] =
            bit ? std::int8_t{1} : std::int8_t{-1};
        node = 2 * node + 1 + bit;
      }
    }
  }
  return tm;
}

void apply_thresholds(const TreeMatrices& tm, maddness::HashForest& forest) {
  if (forest.c_count() != tm.c_count || forest.k_count() != tm.k_count)
    throw ValidationError("apply_thresholds: shape mismatch");
  for (std::size_t c = 0; c < tm.c_count; ++c)
    for (std::size_t j = 0; j + 1 < tm.k_count; ++j)
      forest.trees[c].thresholds[j] = tm.theta_at(c, j);
}

namespace {

void check_inputs(const TreeMatrices& tm, const MatrixF64& x) {
  for (std::uint32_t col : tm.dim_select)
    if (col >= x.cols)
      throw ValidationError("difftree: input narrower than dim_select");
}

// S x - theta for one (row, codebook): the per-node decision values.
void node_decisions(const TreeMatrices& tm, const MatrixF64& x, std::size_t n,
                    std::size_t c, std::vector<double>& out) {
  const std::size_t internal = tm.k_count - 1;
  out.resize(internal);
  for (std::size_t j = 0; j < internal; ++j) {
    double sx = 0.0;
    for (std::size_t slot = 0; slot < tm.levels; ++slot)
      if (tm.s_at(c, j, slot)) sx += x.at(n, tm.dim_at(c, slot));
    out[j] = sx - tm.theta_at(c, j);
  }
}

}  // namespace

pq::EncodingMatrix encode_hard(const TreeMatrices& tm, const MatrixF64& x_rows) {
  check_inputs(tm, x_rows);
  pq::EncodingMatrix codes(x_rows.rows, tm.c_count, tm.k_count);
  const std::size_t internal = tm.k_count - 1;
  std::vector<double> d;
  std::vector<int> sgn(internal);
  for (std::size_t n = 0; n < x_rows.rows; ++n) {
    for (std::size_t c = 0; c < tm.c_count; ++c) {
      node_decisions(tm, x_rows, n, c, d);
      for (std::size_t j = 0; j < internal; ++j)
        sgn[j] = d[j] < 0.0 ? -1 : 1;  // sign(0) := +1
      int best_score = std::numeric_limits<int>::min();
      std::size_t best_leaf = 0;
      for (std::size_t leaf = 0; leaf < tm.k_count; ++leaf) {
        int score = 0;
        for (std::size_t j = 0; j < internal; ++j)
          score += static_cast<int>(tm.h_at(c, leaf, j)) * sgn[j];
        if (score > best_score) {
          best_score = score;
          best_leaf = leaf;
        }
      }
      codes.at(n, c) = static_cast<std::uint32_t>(best_leaf);
    }
  }
  return codes;
}

SoftAssign encode_soft(const TreeMatrices& tm, const SoftParams& sp,
                       const MatrixF64& x_rows) {
  if (sp.temperature <= 0.0 || sp.slope <= 0.0)
    throw ValidationError("encode_soft: temperature and slope must be > 0");
  check_inputs(tm, x_rows);
  SoftAssign soft;
  soft.n_rows = x_rows.rows;
  soft.c_count = tm.c_count;
  soft.k_count = tm.k_count;
  soft.p.assign(soft.n_rows * soft.c_count * soft.k_count, 0.0);
  const std::size_t internal = tm.k_count - 1;
  std::vector<double> d, t(internal), logits(tm.k_count);
  for (std::size_t n = 0; n < x_rows.rows; ++n) {
    for (std::size_t c = 0; c < tm.c_count; ++c) {
      node_decisions(tm, x_rows, n, c, d);
      for (std::size_t j = 0; j < internal; ++j)
        t[j] = std::tanh(sp.slope * d[j]);
      double max_logit = -std::numeric_limits<double>::infinity();
      for (std::size_t leaf = 0; leaf < tm.k_count; ++leaf) {
        double z = 0.0;
        for (std::size_t j = 0; j < internal; ++j)
          z += static_cast<double>(tm.h_at(c, leaf, j)) * t[j];
        logits[leaf] = z / sp.temperature;
        max_logit = std::max(max_logit, logits[leaf]);
      }
      double denom = 0.0;
      for (std::size_t leaf = 0; leaf < tm.k_count; ++leaf) {
        logits[leaf] = std::exp(logits[leaf] - max_logit);
        denom += logits[leaf];
      }
      for (std::size_t leaf = 0; leaf < tm.k_count; ++leaf)
        soft.at(n, c, leaf) = logits[leaf] / denom;
    }
  }
  return soft;
}

MatrixF64 amm_ste_forward(const TreeMatrices& tm, const pq::LookupTable& lut,
                          const MatrixF64& x_rows) {
  if (lut.c_count != tm.c_count || lut.k_count != tm.k_count)
    throw ValidationError("amm_ste_forward: LUT shape mismatch");
  return pq::decode_accumulate(encode_hard(tm, x_rows), lut);
}

SteGradients amm_ste_backward(const TreeMatrices& tm, const SoftParams& sp,
                              const pq::LookupTable& lut, const MatrixF64& x_rows,
                              const MatrixF64& upstream_grad) {
  if (upstream_grad.rows != x_rows.rows || upstream_grad.cols != lut.m_count)
    throw ValidationError("amm_ste_backward: upstream shape mismatch");
  if (lut.c_count != tm.c_count || lut.k_count != tm.k_count)
    throw ValidationError("amm_ste_backward: LUT shape mismatch");

  SteGradients g;
  g.d_lut.assign(lut.values.size(), 0.0);
  g.d_theta.assign(tm.theta.size(), 0.0);

  // LUT gradient: exact, through the hard one-hot path
  const pq::EncodingMatrix codes = encode_hard(tm, x_rows);
  for (std::size_t n = 0; n < x_rows.rows; ++n)
    for (std::size_t c = 0; c < tm.c_count; ++c) {
      const std::size_t k = codes.at(n, c);
      double* dst = &g.d_lut[(c * tm.k_count + k) * lut.m_count];
      const double* up = upstream_grad.row_ptr(n);
      for (std::size_t m = 0; m < lut.m_count; ++m) dst[m] += up[m];
    }

  // theta gradient: soft surrogate, softmax(H tanh(slope (Sx - theta))) / T
  const std::size_t internal = tm.k_count - 1;
  std::vector<double> d, t(internal), p(tm.k_count), w(tm.k_count);
  for (std::size_t n = 0; n < x_rows.rows; ++n) {
    const double* up = upstream_grad.row_ptr(n);
    for (std::size_t c = 0; c < tm.c_count; ++c) {
      node_decisions(tm, x_rows, n, c, d);
      for (std::size_t j = 0; j < internal; ++j)
        t[j] = std::tanh(sp.slope * d[j]);
      double max_logit = -std::numeric_limits<double>::infinity();
      for (std::size_t leaf = 0; leaf < tm.k_count; ++leaf) {
        double z = 0.0;
        for (std::size_t j = 0; j < internal; ++j)
          z += static_cast<double>(tm.h_at(c, leaf, j)) * t[j];
        p[leaf] = z / sp.temperature;
        max_logit = std::max(max_logit, p[leaf]);
      }
      double denom = 0.0;
      for (std::size_t leaf = 0; leaf < tm.k_count; ++leaf) {
        p[leaf] = std::exp(p[leaf] - max_logit);
        denom += p[leaf];
      }
      double wbar = 0.0;
      for (std::size_t leaf = 0; leaf < tm.k_count; ++leaf) {
        p[leaf] /= denom;
        double wk = 0.0;
        const double* lrow = &lut.values[(c * tm.k_count + leaf) * lut.m_count];
        for (std::size_t m = 0; m < lut.m_count; ++m) wk += up[m] * lrow[m];
        w[leaf] = wk;
        wbar += p[leaf] * wk;
      }
      for (std::size_t j = 0; j < internal; ++j) {
        double dt = 0.0;  // dLoss/dt_j
        for (std::size_t leaf = 0; leaf < tm.k_count; ++leaf) {
          const std::int8_t hij = tm.h_at(c, leaf, j);
          if (hij) dt += static_cast<double>(hij) * p[leaf] * (w[leaf] - wbar);
        }
        dt /= sp.temperature;
        // du/dtheta = -1, dt/du = slope (1 - t^2)
        g.d_theta[c * internal + j] -= sp.slope * (1.0 - t[j] * t[j]) * dt;
      }
    }
  }
  return g;
}

double soft_weighted_output(const TreeMatrices& tm, const SoftParams& sp,
                            const pq::LookupTable& lut, const MatrixF64& x_rows,
                            const MatrixF64& upstream_grad) {
  const SoftAssign soft = encode_soft(tm, sp, x_rows);
  double total = 0.0;
  for (std::size_t n = 0; n < x_rows.rows; ++n)
    for (std::size_t c = 0; c < tm.c_count; ++c)
      for (std::size_t k = 0; k < tm.k_count; ++k) {
        const double e = soft.at(n, c, k);
        const double* lrow = &lut.values[(c * tm.k_count + k) * lut.m_count];
        double acc = 0.0;
        for (std::size_t m = 0; m < lut.m_count; ++m)
          acc += upstream_grad.at(n, m) * lrow[m];
        total += e * acc;
      }
  return total;
}

namespace {

double cosine_lr(double lr_max, double lr_min, std::size_t epoch,
                 std::size_t t_max) {
  if (t_max == 0) return lr_max;
  const double phase = M_PI * static_cast<double>(epoch) / static_cast<double>(t_max);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(phase));
}

struct LossEval {
  double loss = 0.0;
  MatrixF64 upstream;     // dLoss/dOut
  MatrixF64 target_view;  // dense targets for the rel_frobenius metric
};

LossEval eval_loss(const MatrixF64& out, const ToyDataset& ds) {
  LossEval ev;
  ev.upstream = MatrixF64(out.rows, out.cols, 0.0);
  if (!ds.classification) {
    if (!ds.targets.same_shape(out))
      throw ValidationError("finetune: target shape mismatch");
    ev.target_view = ds.targets;
    const double inv = 1.0 / static_cast<double>(out.rows * out.cols);
    for (std::size_t i = 0; i < out.elems.size(); ++i) {
      const double diff = out.elems[i] - ds.targets.elems[i];
      ev.loss += diff * diff * inv;
      ev.upstream.elems[i] = 2.0 * diff * inv;
    }
    return ev;
  }
  if (ds.targets.cols != 1 || ds.targets.rows != out.rows)
    throw ValidationError("finetune: classification targets must be n x 1");
  ev.target_view = MatrixF64(out.rows, out.cols, 0.0);
  const double inv = 1.0 / static_cast<double>(out.rows);
  std::vector<double> prob(out.cols);
  for (std::size_t n = 0; n < out.rows; ++n) {
    const auto label = static_cast<std::size_t>(ds.targets.at(n, 0));
    if (label >= out.cols)
      throw ValidationError("finetune: label out of range");
    ev.target_view.at(n, label) = 1.0;
    double mx = out.at(n, 0);
    for (std::size_t m = 1; m < out.cols; ++m) mx = std::max(mx, out.at(n, m));
    double denom = 0.0;
    for (std::size_t m = 0; m < out.cols; ++m) {
      prob[m] = std::exp(out.at(n, m) - mx);
      denom += prob[m];
    }
    for (std::size_t m = 0; m < out.cols; ++m) prob[m] /= denom;
    ev.loss -= std::log(std::max(prob[label], 1e-300)) * inv;
    for (std::size_t m = 0; m < out.cols; ++m)
      ev.upstream.at(n, m) = (prob[m] - (m == label ? 1.0 : 0.0)) * inv;
  }
  return ev;
}

}  // namespace

FinetuneResult finetune_toy(const ModelBundle& model, const ToyDataset& dataset,
                            const FinetuneOptions& opts) {
  model.validate();
  if (dataset.inputs.cols != model.d)
    throw ValidationError("finetune: input width != model d");

  FinetuneResult res;
  res.model = model;
  TreeMatrices tm = from_forest(res.model.forest, res.model.subspaces);
  pq::LookupTable& lut = res.model.lut;

  for (std::size_t epoch = 0; epoch <= opts.epochs; ++epoch) {
    const MatrixF64 out = amm_ste_forward(tm, lut, dataset.inputs);
    LossEval ev = eval_loss(out, dataset);
    if (!std::isfinite(ev.loss))
      throw NumericalError("finetune: loss diverged at epoch " +
                           std::to_string(epoch));
    const double lr =
        epoch < opts.epochs ? cosine_lr(opts.lr, opts.lr_min, epoch, opts.epochs)
                            : 0.0;
    res.history.push_back(
        {epoch, ev.loss, lr, frobenius_error(out, ev.target_view).rel_frobenius});
    if (epoch == opts.epochs) break;

    const SteGradients g =
        amm_ste_backward(tm, opts.soft, lut, dataset.inputs, ev.upstream);
    for (std::size_t i = 0; i < lut.values.size(); ++i)
      lut.values[i] -= lr * g.d_lut[i];
    for (std::size_t i = 0; i < tm.theta.size(); ++i)
      tm.theta[i] -= lr * opts.lr_theta_scale * g.d_theta[i];
  }

  apply_thresholds(tm, res.model.forest);
  if (res.model.qlut) res.model.qlut = quantsim::quantize_lut(res.model.lut);
  return res;
}

}  // namespace madlut::difftree
