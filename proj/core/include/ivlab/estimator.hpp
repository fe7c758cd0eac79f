#pragma once

#include <cstdint>
#include <vector>

namespace ivlab::estimator {

// One logged interaction: recommendation z, chosen action x, reward y.
// Binary mode (arm_count == 1) codes z, x in {0, 1}; k-arm mode
// (arm_count == k >= 2) codes them as arm indices 1..k.
struct SampleRecord {
  int z = 0;
  int x = 0;
  double y = 0.0;
};

struct SampleSet {
  std::vector<SampleRecord> records;
  int arm_count = 1;

  std::size_t size() const { return records.size(); }
  void validate() const;
};

// Point estimate with its finite-sample approximation bound A(S, delta).
// bound is +infinity exactly when the denominator vanishes (binary) or the
// arm interaction matrix is singular (k-arm); theta is meaningless then.
struct EstimateWithBound {
  std::vector<double> theta;
  double bound = 0.0;
  double delta = 0.0;
  double denominator = 0.0;

  bool informative() const;
  double scalar() const { return theta.front(); }
};

// Centered instrument covariance sum_i (x_i - xbar)(z_i - zbar). Exactly
// zero whenever z or x is in-sample constant.
double instrument_denominator(const SampleSet& s);

// Wald / 2SLS estimator for the binary treatment.
double wald_estimate(const SampleSet& s);

// Naive difference-of-means comparator (regression of y on x).
double ols_estimate(const SampleSet& s);

// A(S, delta) = 2 sigma_g sqrt(2 n log(2/delta)) / |denominator|.
double approximation_bound_binary(const SampleSet& s, double delta,
                                  double sigma_g);

EstimateWithBound estimate_with_bound_binary(const SampleSet& s, double delta,
                                             double sigma_g);

// k-treatment IV estimate: solves (sum z_i x_i^T) theta = sum z_i y_i over
// one-hot encodings built internally from the arm indices.
std::vector<double> iv_estimate_k(const SampleSet& s);

// A(S, delta) = sigma_g sqrt(2 n k log(k/delta)) / sigma_min(sum z_i x_i^T).
double approximation_bound_k(const SampleSet& s, double delta, double sigma_g);

EstimateWithBound estimate_with_bound_k(const SampleSet& s, double delta,
                                        double sigma_g);

// Pairwise bound between any two arms: sqrt(2) * A(S, delta).
double pairwise_bound(double a);

// High-probability lower bound on |sum (x - xbar)(z - zbar)| when a p_c
// fraction of the population complies; exact n zbar (1 - zbar) at p_c = 1,
// clamped at zero otherwise.
double denominator_lower_bound(std::uint64_t n, double z_bar, double p_c,
                               double delta);

}  // namespace ivlab::estimator
