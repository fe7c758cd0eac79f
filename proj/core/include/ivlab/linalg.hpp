#pragma once

#include <cstddef>
#include <vector>

namespace ivlab::linalg {

// Row-major dense square matrix, sized k x k for small k.
struct Matrix {
  std::size_t n = 0;
  std::vector<double> a;

  explicit Matrix(std::size_t size) : n(size), a(size * size, 0.0) {}
  double& at(std::size_t r, std::size_t c) { return a[r * n + c]; }
  double at(std::size_t r, std::size_t c) const { return a[r * n + c]; }
};

// Solves M x = b by Gaussian elimination with partial pivoting. Returns
// false when a pivot falls below tol * max|entry| (matrix treated as
// singular); x is unspecified in that case.
bool solve(Matrix m, std::vector<double> b, std::vector<double>& x,
           double tol = 1e-12);

// Smallest singular value of M, from the eigenvalues of M^T M computed with
// cyclic Jacobi sweeps to 1e-12 relative off-diagonal tolerance.
double min_singular_value(const Matrix& m);
double max_singular_value(const Matrix& m);

}  // namespace ivlab::linalg
