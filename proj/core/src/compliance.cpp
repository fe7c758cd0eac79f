#include "ivlab/compliance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ivlab/errors.hpp"

namespace ivlab::compliance {

namespace {

void check_prob(double v, const char* what) {
  if (!(v > 0.0) || v > 1.0) {
    throw ConfigError(std::string(what) + " must lie in (0, 1]");
  }
}

void check_tau(double tau) {
  if (!(tau > 0.0) || tau > 1.0) throw ConfigError("tau must lie in (0, 1]");
}

std::uint64_t ceil_to_count(double v) {
  if (!(v >= 0.0)) return 0;
  if (v >= 9.0e18) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(std::ceil(v));
}

}  // namespace

std::vector<double> PriorSpec::arm_prior_means() const {
  std::vector<double> means;
  means.reserve(arm_priors.size());
  for (const auto& p : arm_priors) means.push_back(stats::truncated_mean(p));
  return means;
}

PriorSpec make_prior(const stats::TruncatedGaussian& theta_prior,
                     const stats::GaussianBaseline& baseline) {
  theta_prior.validate();
  baseline.validate();
  PriorSpec spec;
  spec.theta_prior = theta_prior;
  spec.baseline = baseline;
  spec.prior_mean_theta = stats::truncated_mean(theta_prior);
  spec.preference = spec.prior_mean_theta < 0.0 ? Preference::NeverTaker
                                                : Preference::AlwaysTaker;
  return spec;
}

void XiConfig::validate() const {
  if (ell0 < 1 || ell1 < 1) throw ConfigError("XiConfig: ell0, ell1 must be >= 1");
  if (!(delta > 0.0) || !(delta < 1.0)) throw ConfigError("XiConfig: delta must lie in (0, 1)");
  if (sigma_g < 0.0) throw ConfigError("XiConfig: sigma_g must be >= 0");
}

double xi_threshold(const XiConfig& cfg) {
  cfg.validate();
  const double log_term = std::log(2.0 / cfg.delta);
  return cfg.sigma_g * (std::sqrt(2.0 * log_term / static_cast<double>(cfg.ell0)) +
                        std::sqrt(2.0 * log_term / static_cast<double>(cfg.ell1))) +
         cfg.g_gap_bound + 0.5;
}

bool xi_event_holds(double y_bar_1, double y_bar_0, const XiConfig& cfg) {
  return y_bar_1 > y_bar_0 + xi_threshold(cfg);
}

XiEstimate estimate_xi_probability(const TypeMixture& mixture,
                                   const XiConfig& cfg,
                                   std::size_t compliant_type,
                                   std::uint64_t iters,
                                   stats::RngStream& rng) {
  cfg.validate();
  if (iters < 1) throw ConfigError("estimate_xi_probability: iters must be >= 1");
  if (compliant_type >= mixture.priors.size()) {
    throw ConfigError("estimate_xi_probability: compliant_type out of range");
  }

  std::vector<std::size_t> never_types;
  std::vector<std::size_t> always_types;
  double never_mass = 0.0;
  double always_mass = 0.0;
  for (std::size_t i = 0; i < mixture.priors.size(); ++i) {
    if (mixture.priors[i].preference == Preference::NeverTaker) {
      never_types.push_back(i);
      never_mass += mixture.fractions[i];
    } else {
      always_types.push_back(i);
      always_mass += mixture.fractions[i];
    }
  }
  if (never_types.empty() || always_types.empty() || never_mass <= 0.0 ||
      always_mass <= 0.0) {
    throw ConfigError(
        "estimate_xi_probability: population needs both never-taker and "
        "always-taker mass (event xi uses both arm means)");
  }

  auto pick = [&](const std::vector<std::size_t>& pool, double mass) {
    double u = rng.uniform01() * mass;
    for (std::size_t idx : pool) {
      u -= mixture.fractions[idx];
      if (u <= 0.0) return idx;
    }
    return pool.back();
  };

  std::uint64_t hits = 0;
  std::vector<double> mu_g(mixture.priors.size(), 0.0);
  for (std::uint64_t it = 0; it < iters; ++it) {
    const double theta = stats::sample_truncated_gaussian(
        mixture.priors[compliant_type].theta_prior, rng);
    for (std::size_t i = 0; i < mixture.priors.size(); ++i) {
      const auto& b = mixture.priors[i].baseline;
      mu_g[i] = stats::sample_normal(b.hyper_mean, b.hyper_std, rng);
    }
    double sum0 = 0.0;
    for (std::uint64_t j = 0; j < cfg.ell0; ++j) {
      const std::size_t t = pick(never_types, never_mass);
      sum0 += stats::sample_normal(mu_g[t], mixture.priors[t].baseline.noise_std, rng);
    }
    double sum1 = 0.0;
    for (std::uint64_t j = 0; j < cfg.ell1; ++j) {
      const std::size_t t = pick(always_types, always_mass);
      sum1 += theta + stats::sample_normal(mu_g[t], mixture.priors[t].baseline.noise_std, rng);
    }
    const double y0 = sum0 / static_cast<double>(cfg.ell0);
    const double y1 = sum1 / static_cast<double>(cfg.ell1);
    if (xi_event_holds(y1, y0, cfg)) ++hits;
  }

  XiEstimate est;
  est.iterations = iters;
  est.probability = static_cast<double>(hits) / static_cast<double>(iters);
  est.std_error = std::sqrt(est.probability * (1.0 - est.probability) /
                            static_cast<double>(iters));
  return est;
}

bool xi_event_holds_mirrored(double y_bar_1, const XiConfig& cfg) {
  cfg.validate();
  const double log_term = std::log(2.0 / cfg.delta);
  const double margin =
      cfg.sigma_g * std::sqrt(2.0 * log_term / static_cast<double>(cfg.ell1)) +
      0.5;
  return y_bar_1 < cfg.g_gap_bound - margin;
}

XiEstimate estimate_xi_probability_mirrored(const TypeMixture& mixture,
                                            const XiConfig& cfg,
                                            std::size_t compliant_type,
                                            std::uint64_t iters,
                                            stats::RngStream& rng) {
  cfg.validate();
  if (iters < 1) throw ConfigError("estimate_xi_probability_mirrored: iters must be >= 1");
  if (compliant_type >= mixture.priors.size()) {
    throw ConfigError("estimate_xi_probability_mirrored: compliant_type out of range");
  }
  std::vector<std::size_t> always_types;
  double always_mass = 0.0;
  for (std::size_t i = 0; i < mixture.priors.size(); ++i) {
    if (mixture.priors[i].preference == Preference::AlwaysTaker) {
      always_types.push_back(i);
      always_mass += mixture.fractions[i];
    }
  }
  if (always_types.empty() || always_mass <= 0.0) {
    throw ConfigError(
        "estimate_xi_probability_mirrored: population needs always-taker mass");
  }

  auto pick = [&]() {
    double u = rng.uniform01() * always_mass;
    for (std::size_t idx : always_types) {
      u -= mixture.fractions[idx];
      if (u <= 0.0) return idx;
    }
    return always_types.back();
  };

  std::uint64_t hits = 0;
  std::vector<double> mu_g(mixture.priors.size(), 0.0);
  for (std::uint64_t it = 0; it < iters; ++it) {
    const double theta = stats::sample_truncated_gaussian(
        mixture.priors[compliant_type].theta_prior, rng);
    for (std::size_t i = 0; i < mixture.priors.size(); ++i) {
      const auto& b = mixture.priors[i].baseline;
      mu_g[i] = stats::sample_normal(b.hyper_mean, b.hyper_std, rng);
    }
    double sum1 = 0.0;
    for (std::uint64_t j = 0; j < cfg.ell1; ++j) {
      const std::size_t t = pick();
      sum1 += theta + stats::sample_normal(mu_g[t], mixture.priors[t].baseline.noise_std, rng);
    }
    if (xi_event_holds_mirrored(sum1 / static_cast<double>(cfg.ell1), cfg)) ++hits;
  }

  XiEstimate est;
  est.iterations = iters;
  est.probability = static_cast<double>(hits) / static_cast<double>(iters);
  est.std_error = std::sqrt(est.probability * (1.0 - est.probability) /
                            static_cast<double>(iters));
  return est;
}

double exploration_probability_bound(double mu0, double p_xi) {
  if (!(mu0 < 0.0)) {
    throw NotNeverTakerError(
        "exploration_probability_bound: prior mean must be negative; use the "
        "mirrored variant to incentivize always-takers");
  }
  check_prob(p_xi, "p_xi");
  const double v = 1.0 + 4.0 * mu0 / (p_xi - 4.0 * mu0);
  return std::clamp(v, 0.0, 1.0);
}

double exploration_probability_bound_mirrored(double mu1, double p_xi) {
  if (!(mu1 > 0.0)) {
    throw NotNeverTakerError(
        "exploration_probability_bound_mirrored: prior mean must be positive");
  }
  return exploration_probability_bound(-mu1, p_xi);
}

double exploration_probability_bound_k(const std::vector<double>& arm_means,
                                       double p_xi) {
  if (arm_means.size() < 2) {
    throw ConfigError("exploration_probability_bound_k: need >= 2 arms");
  }
  check_prob(p_xi, "p_xi");
  // Most conservative preference gap under the shared ordering: the gap
  // between the least and most preferred arms.
  const double gap = arm_means.back() - arm_means.front();
  if (!(gap < 0.0)) {
    throw ConfigError(
        "exploration_probability_bound_k: arm prior means must be strictly "
        "decreasing");
  }
  return std::clamp(1.0 + 8.0 * gap / p_xi, 0.0, 1.0);
}

double racing_threshold(const PriorSpec& prior, double tau) {
  check_tau(tau);
  const double tail =
      prior.preference == Preference::NeverTaker
          ? stats::truncated_tail_probability(prior.theta_prior, tau)
          : 1.0 - stats::truncated_tail_probability(prior.theta_prior, -tau);
  return tau * tail / 4.0;
}

double delta_budget(double tau, double p_tail) {
  check_tau(tau);
  if (p_tail < 0.0 || p_tail > 1.0) throw ConfigError("p_tail must lie in [0, 1]");
  return tau * p_tail / (2.0 * tau * p_tail + 2.0);
}

std::uint64_t minimum_sampling_length(double tau_p, double rho, double p_c1,
                                      double sigma_g, double delta) {
  if (!(tau_p > 0.0)) throw ConfigError("minimum_sampling_length: tau_p must be > 0");
  if (!(rho > 0.0) || !(rho < 1.0)) throw ConfigError("minimum_sampling_length: rho must lie in (0, 1)");
  if (!(p_c1 > 0.0)) throw ConfigError("minimum_sampling_length: p_c1 must be > 0");
  if (sigma_g < 0.0) throw ConfigError("minimum_sampling_length: sigma_g must be >= 0");
  if (!(delta > 0.0) || !(delta < 1.0)) throw ConfigError("minimum_sampling_length: delta must lie in (0, 1)");
  const double log_term = std::log(5.0 / delta);
  const double kappa1 =
      8.0 * sigma_g * std::sqrt(2.0 * log_term) / (p_c1 * rho * (1.0 - rho));
  const double kappa2 =
      (3.0 - rho) * std::sqrt(rho * log_term / (2.0 * (1.0 - rho)));
  const double root = kappa1 / tau_p + kappa2;
  return ceil_to_count(root * root);
}

std::uint64_t full_compliance_phase(double tau_p_star, double p_c,
                                    std::uint64_t h, double sigma_g,
                                    double delta) {
  if (!(tau_p_star > 0.0)) throw ConfigError("full_compliance_phase: tau_p_star must be > 0");
  if (!(p_c > 0.0)) throw ConfigError("full_compliance_phase: p_c must be > 0");
  if (h < 1) throw ConfigError("full_compliance_phase: h must be >= 1");
  if (!(sigma_g >= 0.0)) throw ConfigError("full_compliance_phase: sigma_g must be >= 0");
  if (!(delta > 0.0) || !(delta < 1.0)) throw ConfigError("full_compliance_phase: delta must lie in (0, 1)");
  const double log_term = std::log(5.0 / delta);
  const double inner = 32.0 * sigma_g * std::sqrt(2.0 * log_term) / tau_p_star +
                       std::sqrt(50.0 * log_term);
  const double root = inner / (2.0 * static_cast<double>(h) * p_c);
  return ceil_to_count(root * root);
}

}  // namespace ivlab::compliance
