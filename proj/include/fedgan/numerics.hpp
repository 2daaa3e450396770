#pragma once

#include <cstddef>
#include <vector>

namespace fedgan {

/// Dense row-major matrix of doubles. Used both for the small symmetric
/// matrices of the distance kernels and as the batch/data container
/// elsewhere in the project.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> entries;  // row-major, entries.size() == rows * cols

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), entries(r * c, fill) {}

  static DenseMatrix identity(std::size_t n);

  double& operator()(std::size_t i, std::size_t j) { return entries[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return entries[i * cols + j]; }

  double* row(std::size_t i) { return entries.data() + i * cols; }
  const double* row(std::size_t i) const { return entries.data() + i * cols; }

  bool same_shape(const DenseMatrix& other) const {
    return rows == other.rows && cols == other.cols;
  }
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);
double frobenius_norm(const DenseMatrix& a);
double max_abs(const DenseMatrix& a);
bool all_finite(const DenseMatrix& a);

/// Eigendecomposition of a symmetric matrix. Eigenvalues are sorted
/// descending; eigenvectors is orthonormal with eigenvector k in column k,
/// so V * diag(lambda) * V^T reconstructs the input.
struct SymEigResult {
  std::vector<double> eigenvalues;
  DenseMatrix eigenvectors;
};

/// Cyclic Jacobi eigensolver for symmetric matrices of dimension <= 64.
/// Throws InvalidMatrix for non-square or asymmetric input (asymmetry
/// tolerance 1e-10 relative to the largest entry), NumericalFailure if the
/// sweep cap is hit.
SymEigResult sym_eig(const DenseMatrix& a);

/// Symmetric PSD square root: returns symmetric B with B*B == a.
/// Eigenvalues in [-1e-8, 0) are clamped to zero; anything below -1e-8
/// throws NotPSD.
DenseMatrix psd_sqrt(const DenseMatrix& a);

/// Tr((s1 * s2)^{1/2}) for symmetric PSD s1, s2, evaluated through the
/// symmetric conjugation Tr((sqrt(s2) * s1 * sqrt(s2))^{1/2}). Result is
/// clamped at zero. Throws InvalidMatrix on dimension mismatch.
double trace_sqrt_product(const DenseMatrix& s1, const DenseMatrix& s2);

}  // namespace fedgan
