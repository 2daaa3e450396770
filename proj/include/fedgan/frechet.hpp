#pragma once

#include <cstddef>
#include <vector>

#include "fedgan/numerics.hpp"

namespace fedgan {

/// Gaussian summary of a sample set, the input of the Fréchet distance.
struct GaussianStats {
  std::vector<double> mean;
  DenseMatrix covariance;
  std::size_t sample_count = 0;
};

/// Column means plus the unbiased (m-1) sample covariance, symmetrized.
/// Throws TooFewSamples for fewer than two rows.
GaussianStats fit_gaussian(const DenseMatrix& samples);

/// Fréchet (Gaussian 2-Wasserstein) distance:
///   |mu_a - mu_b|^2 + Tr(Sigma_a + Sigma_b - 2 (Sigma_a Sigma_b)^{1/2})
/// Tiny negatives from roundoff are clamped to zero.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

/// Symmetric pairwise distance matrix with zero diagonal.
struct FidMatrix {
  std::size_t n = 0;
  DenseMatrix values;
};

FidMatrix pairwise_fid(const std::vector<DenseMatrix>& sample_sets);

/// Per-client totals: F_n = sum over m != n of values[n][m].
std::vector<double> client_total_fid(const FidMatrix& m);

}  // namespace fedgan
