#include "ivlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ivlab/errors.hpp"

namespace ivlab::stats {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_tail(double z) { return 0.5 * std::erfc(z * kInvSqrt2); }

// AS241 (PPND16): quantile of the standard normal for p in (0, 1).
double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw ConfigError("normal_quantile: p must lie in [0, 1]");
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        q * (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                  6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
              1.3314166789178437745e2) * r + 3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
            5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
          4.2313330701600911252e1) * r + 1.0);
    return num / den;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
    value = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    value = num / den;
  }
  return q < 0.0 ? -value : value;
}

void TruncatedGaussian::validate() const {
  if (!(std_dev > 0.0)) {
    throw ConfigError("TruncatedGaussian: std_dev must be > 0");
  }
  if (!(upper > lower)) {
    throw ConfigError("TruncatedGaussian: upper must exceed lower");
  }
  if (!std::isfinite(mean) || !std::isfinite(lower) || !std::isfinite(upper)) {
    throw ConfigError("TruncatedGaussian: parameters must be finite");
  }
}

double truncated_mean(const TruncatedGaussian& dist) {
  dist.validate();
  const double a = (dist.lower - dist.mean) / dist.std_dev;
  const double b = (dist.upper - dist.mean) / dist.std_dev;
  const double mass = normal_cdf(b) - normal_cdf(a);
  if (mass <= 0.0) return std::clamp(dist.mean, dist.lower, dist.upper);
  return dist.mean + dist.std_dev * (normal_pdf(a) - normal_pdf(b)) / mass;
}

double truncated_tail_probability(const TruncatedGaussian& dist,
                                  double threshold) {
  dist.validate();
  if (threshold <= dist.lower) return 1.0;
  if (threshold >= dist.upper) return 0.0;
  const double a = (dist.lower - dist.mean) / dist.std_dev;
  const double b = (dist.upper - dist.mean) / dist.std_dev;
  const double t = (threshold - dist.mean) / dist.std_dev;
  const double mass = normal_cdf(b) - normal_cdf(a);
  if (mass <= 0.0) return threshold < dist.mean ? 1.0 : 0.0;
  return std::clamp((normal_cdf(b) - normal_cdf(t)) / mass, 0.0, 1.0);
}

double sample_truncated_gaussian(const TruncatedGaussian& dist,
                                 RngStream& rng) {
  dist.validate();
  const double a = (dist.lower - dist.mean) / dist.std_dev;
  const double b = (dist.upper - dist.mean) / dist.std_dev;
  const double plo = normal_cdf(a);
  const double phi = normal_cdf(b);
  const double u = rng.uniform_open01();
  if (!(phi - plo > 0.0)) {
    // All mass numerically outside the window; degenerate narrow case.
    return std::clamp(dist.mean, dist.lower, dist.upper);
  }
  const double p = plo + u * (phi - plo);
  const double x = dist.mean + dist.std_dev * normal_quantile(p);
  return std::clamp(x, dist.lower, dist.upper);
}

void GaussianBaseline::validate() const {
  if (hyper_std < 0.0 || noise_std < 0.0) {
    throw ConfigError("GaussianBaseline: std parameters must be >= 0");
  }
  if (!std::isfinite(hyper_mean)) {
    throw ConfigError("GaussianBaseline: hyper_mean must be finite");
  }
}

double sample_normal(double mean, double std_dev, RngStream& rng) {
  if (std_dev == 0.0) {
    (void)rng.next_u64();  // keep stream layout independent of std_dev
    return mean;
  }
  return mean + std_dev * normal_quantile(rng.uniform_open01());
}

}  // namespace ivlab::stats
