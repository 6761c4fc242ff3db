#include "madlut/synth.hpp"

#include <cmath>

namespace madlut {

MatrixF64 gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                          double mean, double stddev) {
  MatrixF64 out(rows, cols, 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(mean, stddev);
  for (double& v : out.elems) v = dist(rng);
  return out;
}

TensorF64 gaussian_tensor(std::size_t n, std::size_t c, std::size_t h,
                          std::size_t w, std::uint64_t seed, double mean,
                          double stddev) {
  TensorF64 out(n, c, h, w, 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(mean, stddev);
  for (double& v : out.elems) v = dist(rng);
  return out;
}

BlobDataset make_blobs(std::size_t n, std::size_t dims, std::size_t k,
                       double separation, double noise, std::uint64_t seed) {
  if (k < 1) throw ValidationError("make_blobs: k must be >= 1");
  std::size_t bits = 1;
  while ((std::size_t{1} << bits) < k) ++bits;
  if (bits > dims)
    throw ValidationError("make_blobs: need at least log2(k) dims");

  BlobDataset ds;
  ds.centers = MatrixF64(k, dims, 0.0);
  for (std::size_t label = 0; label < k; ++label)
    for (std::size_t d = 0; d < dims; ++d)
      ds.centers.at(label, d) =
          ((label >> (d % bits)) & 1u) ? separation : -separation;

  ds.points = MatrixF64(n, dims, 0.0);
  ds.labels.resize(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t label = static_cast<std::uint32_t>(i % k);
    ds.labels[i] = label;
    for (std::size_t d = 0; d < dims; ++d)
      ds.points.at(i, d) = ds.centers.at(label, d) + noise * dist(rng);
  }
  return ds;
}

}  // namespace madlut
