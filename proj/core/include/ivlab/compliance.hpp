#pragma once

#include <cstdint>
#include <vector>

#include "ivlab/rng.hpp"
#include "ivlab/stats.hpp"

namespace ivlab::compliance {

enum class Preference { NeverTaker, AlwaysTaker };

// One agent type's beliefs: a truncated-Gaussian prior over the treatment
// effect and the Gaussian baseline-reward hierarchy. prior_mean_theta is the
// mean of the truncated prior (mu^(u)); the preference follows its sign.
// arm_priors is populated only in k-treatment mode, one prior per arm with
// strictly decreasing means (shared preference ordering).
struct PriorSpec {
  stats::TruncatedGaussian theta_prior;
  stats::GaussianBaseline baseline;
  double prior_mean_theta = 0.0;
  Preference preference = Preference::NeverTaker;
  std::vector<stats::TruncatedGaussian> arm_priors;

  std::vector<double> arm_prior_means() const;
};

PriorSpec make_prior(const stats::TruncatedGaussian& theta_prior,
                     const stats::GaussianBaseline& baseline);

// First-stage event parameters: minimum per-arm sample counts, failure
// probability, the baseline-gap bound G^(0) and the sub-Gaussian norm.
struct XiConfig {
  std::uint64_t ell0 = 1;
  std::uint64_t ell1 = 1;
  double delta = 0.1;
  double g_gap_bound = 0.0;
  double sigma_g = 1.0;

  void validate() const;
};

// Threshold the biased first-stage gap must clear for the skeptical prior to
// concede the treatment works.
double xi_threshold(const XiConfig& cfg);

// True iff ybar1 > ybar0 + sigma_g (sqrt(2 log(2/d)/l0) + sqrt(2 log(2/d)/l1))
//                 + G^(0) + 1/2.
bool xi_event_holds(double y_bar_1, double y_bar_0, const XiConfig& cfg);

struct XiEstimate {
  double probability = 0.0;
  double std_error = 0.0;
  std::uint64_t iterations = 0;
};

// Forward declaration; the full population lives in the agents module.
struct TypeMixture {
  std::vector<PriorSpec> priors;
  std::vector<double> fractions;
};

// Monte Carlo estimate of P[xi] under the compliant type's prior: each
// iteration draws theta fresh, realizes per-type baseline means, simulates
// ell0 control draws from never-takers and ell1 treatment draws from
// always-takers, and checks the event.
XiEstimate estimate_xi_probability(const TypeMixture& mixture,
                                   const XiConfig& cfg,
                                   std::size_t compliant_type,
                                   std::uint64_t iters, stats::RngStream& rng);

// Mirrored event for all-always-taker populations: no control samples exist,
// so the event drops ybar0 and fires when the treatment mean falls far below
// the baseline-mean proxy carried in g_gap_bound.
bool xi_event_holds_mirrored(double y_bar_1, const XiConfig& cfg);

XiEstimate estimate_xi_probability_mirrored(const TypeMixture& mixture,
                                            const XiConfig& cfg,
                                            std::size_t compliant_type,
                                            std::uint64_t iters,
                                            stats::RngStream& rng);

// Lemma-derived ceiling rho <= 1 + 4 mu0 / (P[xi] - 4 mu0), clamped to [0, 1].
// mu0 must be negative (never-taker); the mirrored variant serves
// always-taker incentivization by symmetry.
double exploration_probability_bound(double mu0, double p_xi);
double exploration_probability_bound_mirrored(double mu1, double p_xi);

// k-treatment ceiling rho <= 1 + 8 (mu_j - mu_i) / P[xi^(u)] evaluated at the
// most conservative preference gap (last arm versus arm 1).
double exploration_probability_bound_k(const std::vector<double>& arm_means,
                                       double p_xi);

// Racing-stage compliance threshold tau P[theta > tau]/4 (never-takers) or
// tau P[theta < -tau]/4 (always-takers).
double racing_threshold(const PriorSpec& prior, double tau);

// Failure-probability budget tau p / (2 tau p + 2) the racing guarantee
// assumes; certificates are denied when delta exceeds it.
double delta_budget(double tau, double p_tail);

// Minimum second-stage length for type-u compliance in the racing stage:
// ceil((kappa1 / tauP + kappa2)^2).
std::uint64_t minimum_sampling_length(double tau_p, double rho, double p_c1,
                                      double sigma_g, double delta);

// Phase index from which the most resistant type complies:
// ceil(((32 sigma_g sqrt(2 log(5/d)) / tauP + sqrt(50 log(5/d))) / (2 h p_c))^2).
std::uint64_t full_compliance_phase(double tau_p_star, double p_c,
                                    std::uint64_t h, double sigma_g,
                                    double delta);

}  // namespace ivlab::compliance
