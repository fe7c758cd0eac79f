#pragma once

#include "ivlab/rng.hpp"

namespace ivlab::stats {

// Standard normal CDF, density, upper tail and quantile. The quantile uses
// Wichura's AS241 rational approximation (double precision); the tail is
// accurate to well below 1e-7 absolute everywhere.
double normal_cdf(double z);
double normal_pdf(double z);
double normal_tail(double z);
double normal_quantile(double p);

// Gaussian conditioned on [lower, upper]. The treatment-effect priors use
// bounds [-1, 1] so the effect always lies in the model's range.
struct TruncatedGaussian {
  double mean = 0.0;
  double std_dev = 1.0;
  double lower = -1.0;
  double upper = 1.0;

  void validate() const;
};

// Closed-form mean of the truncated distribution.
double truncated_mean(const TruncatedGaussian& dist);

// P[X > threshold] for X ~ dist, as a ratio of normal CDFs.
double truncated_tail_probability(const TruncatedGaussian& dist,
                                  double threshold);

// Inverse-CDF sampler: one uniform consumed per draw, so the stream layout
// does not depend on the values drawn.
double sample_truncated_gaussian(const TruncatedGaussian& dist,
                                 RngStream& rng);

// Per-type baseline reward: the run-level mean mu_g is drawn once from
// Normal(hyper_mean, hyper_std^2); each agent's baseline is then drawn from
// Normal(mu_g, noise_std^2). noise_std is the sub-Gaussian norm sigma_g that
// feeds the finite-sample bounds.
struct GaussianBaseline {
  double hyper_mean = 0.0;
  double hyper_std = 0.0;
  double noise_std = 1.0;

  void validate() const;
};

double sample_normal(double mean, double std_dev, RngStream& rng);

}  // namespace ivlab::stats
