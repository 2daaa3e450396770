#include "fedgan/frechet.hpp"

#include <cmath>
#include <string>

#include "fedgan/errors.hpp"

namespace fedgan {

GaussianStats fit_gaussian(const DenseMatrix& samples) {
  const std::size_t m = samples.rows;
  const std::size_t d = samples.cols;
  if (m < 2) {
    throw TooFewSamples("fit_gaussian: need at least 2 samples, got " + std::to_string(m));
  }

  GaussianStats stats;
  stats.sample_count = m;
  stats.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = samples.row(i);
    for (std::size_t j = 0; j < d; ++j) stats.mean[j] += row[j];
  }
  for (double& v : stats.mean) v /= static_cast<double>(m);

  stats.covariance = DenseMatrix(d, d, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = samples.row(i);
    for (std::size_t a = 0; a < d; ++a) {
      const double da = row[a] - stats.mean[a];
      for (std::size_t b = a; b < d; ++b) {
        stats.covariance(a, b) += da * (row[b] - stats.mean[b]);
      }
    }
  }
  const double denom = static_cast<double>(m - 1);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      const double v = stats.covariance(a, b) / denom;
      stats.covariance(a, b) = v;
      stats.covariance(b, a) = v;
    }
  }
  return stats;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.mean.size() != b.mean.size()) {
    throw InvalidInput("frechet_distance: dimension mismatch " +
                       std::to_string(a.mean.size()) + " vs " + std::to_string(b.mean.size()));
  }
  const std::size_t d = a.mean.size();

  double mean_sq = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = a.mean[i] - b.mean[i];
    mean_sq += diff * diff;
  }

  double trace_a = 0.0;
  double trace_b = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    trace_a += a.covariance(i, i);
    trace_b += b.covariance(i, i);
  }

  const double cross = trace_sqrt_product(a.covariance, b.covariance);
  const double fd = mean_sq + trace_a + trace_b - 2.0 * cross;
  return std::max(fd, 0.0);
}

FidMatrix pairwise_fid(const std::vector<DenseMatrix>& sample_sets) {
  const std::size_t n = sample_sets.size();
  if (n < 2) {
    throw InvalidInput("pairwise_fid: need at least 2 sample sets, got " + std::to_string(n));
  }

  std::vector<GaussianStats> stats(n);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      stats[i] = fit_gaussian(sample_sets[i]);
    } catch (const TooFewSamples& e) {
      throw TooFewSamples("pairwise_fid: client " + std::to_string(i) + ": " + e.what());
    }
  }

  FidMatrix m;
  m.n = n;
  m.values = DenseMatrix(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double fd = frechet_distance(stats[i], stats[j]);
      m.values(i, j) = fd;
      m.values(j, i) = fd;
    }
  }
  return m;
}

std::vector<double> client_total_fid(const FidMatrix& m) {
  std::vector<double> totals(m.n, 0.0);
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t j = 0; j < m.n; ++j) {
      if (i != j) totals[i] += m.values(i, j);
    }
  }
  return totals;
}

}  // namespace fedgan
