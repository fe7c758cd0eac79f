#include "ivlab/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace ivlab::linalg {

bool solve(Matrix m, std::vector<double> b, std::vector<double>& x,
           double tol) {
  const std::size_t n = m.n;
  double max_entry = 0.0;
  for (double v : m.a) max_entry = std::max(max_entry, std::abs(v));
  const double threshold = tol * std::max(max_entry, 1.0);

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(m.at(r, col)) > std::abs(m.at(pivot, col))) pivot = r;
    }
    if (std::abs(m.at(pivot, col)) < threshold) return false;
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(m.at(col, c), m.at(pivot, c));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m.at(r, col) / m.at(col, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) m.at(r, c) -= f * m.at(col, c);
      b[r] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= m.at(i, c) * x[c];
    x[i] = s / m.at(i, i);
  }
  return true;
}

namespace {

// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations.
std::vector<double> symmetric_eigenvalues(Matrix s) {
  const std::size_t n = s.n;
  if (n == 1) return {s.at(0, 0)};
  double diag_norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) diag_norm += std::abs(s.at(i, i));
  const double stop = 1e-12 * std::max(diag_norm, 1e-300);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += std::abs(s.at(p, q));
    if (off <= stop) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = s.at(p, q);
        if (apq == 0.0) continue;
        const double app = s.at(p, p);
        const double aqq = s.at(q, q);
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = s.at(i, p);
          const double aiq = s.at(i, q);
          s.at(i, p) = c * aip - sn * aiq;
          s.at(i, q) = sn * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = s.at(p, i);
          const double aqi = s.at(q, i);
          s.at(p, i) = c * api - sn * aqi;
          s.at(q, i) = sn * api + c * aqi;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = s.at(i, i);
  return eig;
}

Matrix gram(const Matrix& m) {
  Matrix g(m.n);
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t j = 0; j < m.n; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < m.n; ++r) s += m.at(r, i) * m.at(r, j);
      g.at(i, j) = s;
    }
  }
  return g;
}

}  // namespace

double min_singular_value(const Matrix& m) {
  const auto eig = symmetric_eigenvalues(gram(m));
  double lo = eig.empty() ? 0.0 : eig.front();
  for (double v : eig) lo = std::min(lo, v);
  return std::sqrt(std::max(lo, 0.0));
}

double max_singular_value(const Matrix& m) {
  const auto eig = symmetric_eigenvalues(gram(m));
  double hi = 0.0;
  for (double v : eig) hi = std::max(hi, v);
  return std::sqrt(std::max(hi, 0.0));
}

}  // namespace ivlab::linalg
