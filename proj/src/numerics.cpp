#include "fedgan/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedgan/errors.hpp"

namespace fedgan {

namespace {

constexpr std::size_t kMaxDim = 64;
constexpr int kMaxJacobiSweeps = 100;

void check_square(const DenseMatrix& a, const char* who) {
  if (a.rows != a.cols || a.rows == 0) {
    throw InvalidMatrix(std::string(who) + ": expected non-empty square matrix, got " +
                        std::to_string(a.rows) + "x" + std::to_string(a.cols));
  }
  if (a.rows > kMaxDim) {
    throw InvalidMatrix(std::string(who) + ": dimension " + std::to_string(a.rows) +
                        " exceeds supported maximum " + std::to_string(kMaxDim));
  }
}

void check_symmetric(const DenseMatrix& a, const char* who) {
  const double tol = 1e-10 * std::max(1.0, max_abs(a));
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = i + 1; j < a.cols; ++j) {
      if (std::abs(a(i, j) - a(j, i)) > tol) {
        throw InvalidMatrix(std::string(who) + ": matrix is not symmetric at (" +
                            std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
}

}  // namespace

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows) {
    throw InvalidMatrix("matmul: inner dimensions do not match (" + std::to_string(a.cols) +
                        " vs " + std::to_string(b.rows) + ")");
  }
  DenseMatrix c(a.rows, b.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = ai[k];
      const double* bk = b.row(k);
      for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

double frobenius_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.entries) s += v * v;
  return std::sqrt(s);
}

double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (double v : a.entries) m = std::max(m, std::abs(v));
  return m;
}

bool all_finite(const DenseMatrix& a) {
  for (double v : a.entries)
    if (!std::isfinite(v)) return false;
  return true;
}

SymEigResult sym_eig(const DenseMatrix& input) {
  check_square(input, "sym_eig");
  check_symmetric(input, "sym_eig");

  const std::size_t n = input.rows;
  // Work on the exactly symmetrized copy so roundoff asymmetry cannot leak
  // into the rotations.
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (input(i, j) + input(j, i));

  DenseMatrix v = DenseMatrix::identity(n);

  const double scale = std::max(max_abs(a), 1e-300);
  const double stop = 1e-15 * scale;

  for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    if (off <= stop) {
      SymEigResult result;
      result.eigenvalues.resize(n);
      for (std::size_t i = 0; i < n; ++i) result.eigenvalues[i] = a(i, i);

      // Sort eigenpairs descending, reordering eigenvector columns to match.
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return result.eigenvalues[x] > result.eigenvalues[y];
      });
      SymEigResult sorted;
      sorted.eigenvalues.resize(n);
      sorted.eigenvectors = DenseMatrix(n, n);
      for (std::size_t k = 0; k < n; ++k) {
        sorted.eigenvalues[k] = result.eigenvalues[order[k]];
        for (std::size_t r = 0; r < n; ++r) sorted.eigenvectors(r, k) = v(r, order[k]);
      }
      return sorted;
    }

    for (std::size_t p = 0; p < n - 1; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= stop * 1e-2) continue;

        const double app = a(p, p);
        const double aqq = a(q, q);
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (std::size_t r = 0; r < n; ++r) {
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = c * arp - s * arq;
          a(r, q) = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double apr = a(p, r);
          const double aqr = a(q, r);
          a(p, r) = c * apr - s * aqr;
          a(q, r) = s * apr + c * aqr;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;

        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }
  throw NumericalFailure("sym_eig: Jacobi iteration did not converge within " +
                         std::to_string(kMaxJacobiSweeps) + " sweeps");
}

DenseMatrix psd_sqrt(const DenseMatrix& a) {
  SymEigResult eig = sym_eig(a);
  const std::size_t n = a.rows;

  std::vector<double> root(n);
  for (std::size_t i = 0; i < n; ++i) {
    double lambda = eig.eigenvalues[i];
    if (lambda < -1e-8) {
      throw NotPSD("psd_sqrt: eigenvalue " + std::to_string(lambda) +
                   " below -1e-8, matrix is not PSD");
    }
    root[i] = std::sqrt(std::max(lambda, 0.0));
  }

  // B = V * diag(sqrt(lambda)) * V^T, then force exact symmetry.
  DenseMatrix b(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        s += eig.eigenvectors(i, k) * root[k] * eig.eigenvectors(j, k);
      b(i, j) = s;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (b(i, j) + b(j, i));
      b(i, j) = avg;
      b(j, i) = avg;
    }
  return b;
}

double trace_sqrt_product(const DenseMatrix& s1, const DenseMatrix& s2) {
  check_square(s1, "trace_sqrt_product");
  check_square(s2, "trace_sqrt_product");
  if (s1.rows != s2.rows) {
    throw InvalidMatrix("trace_sqrt_product: dimension mismatch " + std::to_string(s1.rows) +
                        " vs " + std::to_string(s2.rows));
  }
  check_symmetric(s1, "trace_sqrt_product");
  check_symmetric(s2, "trace_sqrt_product");

  const DenseMatrix root2 = psd_sqrt(s2);
  DenseMatrix m = matmul(matmul(root2, s1), root2);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = i + 1; j < m.cols; ++j) {
      const double avg = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = avg;
      m(j, i) = avg;
    }

  const SymEigResult eig = sym_eig(m);
  double trace = 0.0;
  for (double lambda : eig.eigenvalues) trace += std::sqrt(std::max(lambda, 0.0));
  return std::max(trace, 0.0);
}

}  // namespace fedgan
