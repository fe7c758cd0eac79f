#include "ivlab/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ivlab/errors.hpp"
#include "ivlab/linalg.hpp"

namespace ivlab::estimator {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_nonempty(const SampleSet& s) {
  if (s.records.empty()) throw ConfigError("SampleSet: empty sample set");
}

void check_delta(double delta) {
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw ConfigError("delta must lie in (0, 1)");
  }
}

struct BinarySums {
  std::uint64_t n = 0;
  std::uint64_t sz = 0;   // count of z == 1
  std::uint64_t sx = 0;   // count of x == 1
  std::uint64_t sxz = 0;  // count of x == z == 1
  double sy = 0.0;
  double syz = 0.0;  // sum of y over z == 1
  double syx = 0.0;  // sum of y over x == 1
};

BinarySums binary_sums(const SampleSet& s) {
  BinarySums out;
  out.n = s.records.size();
  for (const auto& r : s.records) {
    if ((r.z != 0 && r.z != 1) || (r.x != 0 && r.x != 1)) {
      throw ConfigError("SampleSet: binary records must have z, x in {0, 1}");
    }
    out.sz += static_cast<std::uint64_t>(r.z);
    out.sx += static_cast<std::uint64_t>(r.x);
    out.sxz += static_cast<std::uint64_t>(r.z & r.x);
    out.sy += r.y;
    if (r.z == 1) out.syz += r.y;
    if (r.x == 1) out.syx += r.y;
  }
  return out;
}

// sum (x - xbar)(z - zbar) = sxz - sx * sz / n, computed from integer counts
// so in-sample constant z or x yields an exact zero.
double centered_xz(const BinarySums& b) {
  const double n = static_cast<double>(b.n);
  return static_cast<double>(b.sxz) -
         static_cast<double>(b.sx) * static_cast<double>(b.sz) / n;
}

linalg::Matrix interaction_matrix(const SampleSet& s, std::vector<double>* rhs) {
  const int k = s.arm_count;
  linalg::Matrix m(static_cast<std::size_t>(k));
  if (rhs) rhs->assign(static_cast<std::size_t>(k), 0.0);
  for (const auto& r : s.records) {
    if (r.z < 1 || r.z > k || r.x < 1 || r.x > k) {
      throw ConfigError("SampleSet: k-arm records must have z, x in 1..k");
    }
    m.at(static_cast<std::size_t>(r.z - 1), static_cast<std::size_t>(r.x - 1)) += 1.0;
    if (rhs) (*rhs)[static_cast<std::size_t>(r.z - 1)] += r.y;
  }
  return m;
}

std::string list_zero_rows(const linalg::Matrix& m) {
  std::string arms;
  for (std::size_t r = 0; r < m.n; ++r) {
    bool all_zero = true;
    for (std::size_t c = 0; c < m.n; ++c) {
      if (m.at(r, c) != 0.0) { all_zero = false; break; }
    }
    if (all_zero) {
      if (!arms.empty()) arms += ", ";
      arms += std::to_string(r + 1);
    }
  }
  return arms;
}

}  // namespace

void SampleSet::validate() const {
  if (arm_count < 1) throw ConfigError("SampleSet: arm_count must be >= 1");
  for (const auto& r : records) {
    if (arm_count == 1) {
      if ((r.z != 0 && r.z != 1) || (r.x != 0 && r.x != 1)) {
        throw ConfigError("SampleSet: binary records must have z, x in {0, 1}");
      }
    } else if (r.z < 1 || r.z > arm_count || r.x < 1 || r.x > arm_count) {
      throw ConfigError("SampleSet: k-arm records must have z, x in 1..k");
    }
  }
}

bool EstimateWithBound::informative() const { return std::isfinite(bound); }

double instrument_denominator(const SampleSet& s) {
  require_nonempty(s);
  return centered_xz(binary_sums(s));
}

double wald_estimate(const SampleSet& s) {
  require_nonempty(s);
  const BinarySums b = binary_sums(s);
  const double den = centered_xz(b);
  if (den == 0.0) {
    throw WeakInstrumentError(
        "wald_estimate: recommendation and action are uncorrelated in-sample");
  }
  const double n = static_cast<double>(b.n);
  const double num = b.syz - static_cast<double>(b.sz) * b.sy / n;
  return num / den;
}

double ols_estimate(const SampleSet& s) {
  require_nonempty(s);
  const BinarySums b = binary_sums(s);
  const double n = static_cast<double>(b.n);
  const double den = static_cast<double>(b.sx) -
                     static_cast<double>(b.sx) * static_cast<double>(b.sx) / n;
  if (den == 0.0) {
    throw DegenerateError("ols_estimate: action is constant in-sample");
  }
  const double num = b.syx - static_cast<double>(b.sx) * b.sy / n;
  return num / den;
}

double approximation_bound_binary(const SampleSet& s, double delta,
                                  double sigma_g) {
  require_nonempty(s);
  check_delta(delta);
  if (sigma_g < 0.0) throw ConfigError("sigma_g must be >= 0");
  const double den = std::abs(centered_xz(binary_sums(s)));
  if (den == 0.0) return kInf;
  const double n = static_cast<double>(s.records.size());
  return 2.0 * sigma_g * std::sqrt(2.0 * n * std::log(2.0 / delta)) / den;
}

EstimateWithBound estimate_with_bound_binary(const SampleSet& s, double delta,
                                             double sigma_g) {
  require_nonempty(s);
  check_delta(delta);
  EstimateWithBound out;
  out.delta = delta;
  out.denominator = instrument_denominator(s);
  if (out.denominator == 0.0) {
    out.theta = {0.0};
    out.bound = kInf;
    return out;
  }
  out.theta = {wald_estimate(s)};
  out.bound = approximation_bound_binary(s, delta, sigma_g);
  return out;
}

std::vector<double> iv_estimate_k(const SampleSet& s) {
  require_nonempty(s);
  if (s.arm_count < 2) throw ConfigError("iv_estimate_k: arm_count must be >= 2");
  std::vector<double> rhs;
  const linalg::Matrix m = interaction_matrix(s, &rhs);
  const std::string uncovered = list_zero_rows(m);
  if (!uncovered.empty()) {
    throw RankDeficientError("iv_estimate_k: arm(s) never recommended: " +
                             uncovered);
  }
  std::vector<double> theta;
  if (!linalg::solve(m, rhs, theta)) {
    throw RankDeficientError(
        "iv_estimate_k: recommendation/action interaction matrix is singular");
  }
  return theta;
}

double approximation_bound_k(const SampleSet& s, double delta, double sigma_g) {
  require_nonempty(s);
  check_delta(delta);
  if (s.arm_count < 2) throw ConfigError("approximation_bound_k: arm_count must be >= 2");
  if (sigma_g < 0.0) throw ConfigError("sigma_g must be >= 0");
  const linalg::Matrix m = interaction_matrix(s, nullptr);
  const double smin = linalg::min_singular_value(m);
  const double smax = linalg::max_singular_value(m);
  if (smin <= 1e-12 * std::max(smax, 1.0)) return kInf;
  const double n = static_cast<double>(s.records.size());
  const double k = static_cast<double>(s.arm_count);
  return sigma_g * std::sqrt(2.0 * n * k * std::log(k / delta)) / smin;
}

EstimateWithBound estimate_with_bound_k(const SampleSet& s, double delta,
                                        double sigma_g) {
  EstimateWithBound out;
  out.delta = delta;
  out.bound = approximation_bound_k(s, delta, sigma_g);
  const linalg::Matrix m = interaction_matrix(s, nullptr);
  out.denominator = linalg::min_singular_value(m);
  if (!std::isfinite(out.bound)) {
    out.theta.assign(static_cast<std::size_t>(s.arm_count), 0.0);
    return out;
  }
  out.theta = iv_estimate_k(s);
  return out;
}

double pairwise_bound(double a) {
  if (a < 0.0) throw ConfigError("pairwise_bound: input must be >= 0");
  return std::sqrt(2.0) * a;
}

double denominator_lower_bound(std::uint64_t n, double z_bar, double p_c,
                               double delta) {
  if (!(z_bar > 0.0) || !(z_bar < 1.0)) {
    throw ConfigError("denominator_lower_bound: z_bar must lie in (0, 1)");
  }
  if (p_c < 0.0 || p_c > 1.0) {
    throw ConfigError("denominator_lower_bound: p_c must lie in [0, 1]");
  }
  check_delta(delta);
  const double nd = static_cast<double>(n);
  const double base = nd * z_bar * (1.0 - z_bar);
  if (p_c == 1.0) return base;
  const double penalty =
      (3.0 - z_bar) *
      std::sqrt(nd * z_bar * std::log(3.0 / delta) / (2.0 * (1.0 - z_bar)));
  return std::max(0.0, base * p_c - penalty);
}

}  // namespace ivlab::estimator
