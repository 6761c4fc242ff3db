#pragma once

#include <cstdint>
#include <random>

#include "madlut/matrix.hpp"

namespace madlut {

/// i.i.d. N(mean, stddev^2) matrix, reproducible per seed.
MatrixF64 gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                          double mean = 0.0, double stddev = 1.0);

TensorF64 gaussian_tensor(std::size_t n, std::size_t c, std::size_t h,
                          std::size_t w, std::uint64_t seed, double mean = 0.0,
                          double stddev = 1.0);

/// k labeled Gaussian blobs in dims dimensions. Centers sit on signed
/// hypercube corners (separation * (+/-1) per dim, corner pattern cycling
/// through the label bits), so each cluster is separable by axis-aligned
/// thresholds. Labels are balanced: label(i) = i % k.
struct BlobDataset {
  MatrixF64 points;
  std::vector<std::uint32_t> labels;
  MatrixF64 centers;  // k x dims
};

BlobDataset make_blobs(std::size_t n, std::size_t dims, std::size_t k,
                       double separation, double noise, std::uint64_t seed);

}  // namespace madlut
