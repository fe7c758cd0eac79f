#pragma once

// Test-side oracles, deliberately independent of the library's code paths:
// plain quadrature for normal/truncated-normal quantities, Cramer's rule for
// tiny linear systems, brute-force re-summation for regret.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace oracle {

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::acos(-1.0));
}

// Composite Simpson integration.
inline double integrate(double lo, double hi, int panels,
                        double (*f)(double)) {
  const double h = (hi - lo) / panels;
  double sum = f(lo) + f(hi);
  for (int i = 1; i < panels; ++i) {
    sum += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return sum * h / 3.0;
}

// Upper tail of the standard normal by quadrature over [z, z+14].
inline double normal_tail(double z) {
  if (z > 40.0) return 0.0;
  if (z < -40.0) return 1.0;
  return integrate(z, z + 14.0, 20000, &normal_pdf);
}

inline double normal_cdf(double z) { return 1.0 - normal_tail(z); }

struct TruncatedMoments {
  double mass = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

// Moments of a Gaussian conditioned on [lo, hi], by quadrature over the
// window (independent of any closed-form phi/Phi identity).
inline TruncatedMoments truncated_moments(double mu, double sigma, double lo,
                                          double hi) {
  const int panels = 20000;
  const double h = (hi - lo) / panels;
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (int i = 0; i <= panels; ++i) {
    const double x = lo + i * h;
    const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    const double density = normal_pdf((x - mu) / sigma) / sigma;
    m0 += w * density;
    m1 += w * density * x;
    m2 += w * density * x * x;
  }
  m0 *= h / 3.0;
  m1 *= h / 3.0;
  m2 *= h / 3.0;
  TruncatedMoments out;
  out.mass = m0;
  out.mean = m1 / m0;
  out.variance = m2 / m0 - out.mean * out.mean;
  return out;
}

// P[X > t] for the truncated Gaussian, by quadrature.
inline double truncated_tail(double mu, double sigma, double lo, double hi,
                             double t) {
  if (t <= lo) return 1.0;
  if (t >= hi) return 0.0;
  const TruncatedMoments full = truncated_moments(mu, sigma, lo, hi);
  const TruncatedMoments upper = truncated_moments(mu, sigma, t, hi);
  return upper.mass / full.mass;
}

// Cramer's rule for a dense 2x2 system.
inline std::vector<double> solve2x2(double a11, double a12, double a21,
                                    double a22, double b1, double b2) {
  const double det = a11 * a22 - a12 * a21;
  if (det == 0.0) throw std::runtime_error("solve2x2: singular");
  return {(b1 * a22 - b2 * a12) / det, (a11 * b2 - a21 * b1) / det};
}

// Binomial acceptance floor: p minus three standard errors at n trials.
inline double binomial_floor(double p, std::uint64_t n) {
  return p - 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace oracle
