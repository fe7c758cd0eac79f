#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "common/invariants.hpp"
#include "common/oracles.hpp"
#include "ivlab/compliance.hpp"
#include "ivlab/errors.hpp"
#include "ivlab/rng.hpp"

using namespace ivlab;

namespace {

compliance::TypeMixture two_type_mixture(double mean0, double mean1,
                                         double noise = 0.0) {
  compliance::TypeMixture m;
  m.priors.push_back(compliance::make_prior(
      stats::TruncatedGaussian{mean0, 0.001, mean0 - 0.01, mean0 + 0.01},
      stats::GaussianBaseline{0.0, 0.0, noise}));
  m.priors.push_back(compliance::make_prior(
      stats::TruncatedGaussian{mean1, 0.001, mean1 - 0.01, mean1 + 0.01},
      stats::GaussianBaseline{0.0, 0.0, noise}));
  m.fractions = {0.5, 0.5};
  return m;
}

}  // namespace

TEST_CASE("xi event threshold") {
  compliance::XiConfig cfg{100, 100, 0.1, 0.5, 1.0};
  const double expected =
      2.0 * std::sqrt(2.0 * std::log(20.0) / 100.0) + 0.5 + 0.5;
  CHECK(compliance::xi_threshold(cfg) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(compliance::xi_threshold(cfg) - 1.4896) < 1e-4);
  CHECK(compliance::xi_event_holds(2.0, 0.0, cfg));
  CHECK_FALSE(compliance::xi_event_holds(1.0, 1.0, cfg));

  compliance::XiConfig noiseless{100, 100, 0.1, 0.0, 0.0};
  CHECK(compliance::xi_event_holds(0.6, 0.0, noiseless));
  CHECK_FALSE(compliance::xi_event_holds(0.5, 0.0, noiseless));
}

TEST_CASE("xi monte carlo hits the degenerate limits") {
  stats::RngStream rng(5);
  compliance::XiConfig cfg{10, 10, 0.1, 0.0, 0.0};
  // treatment effect pinned far above the threshold: the event always fires
  const auto sure = compliance::estimate_xi_probability(
      two_type_mixture(-0.9, 0.9), cfg, 1, 200, rng);
  CHECK(sure.probability == 1.0);
  // pinned far below: never fires
  const auto never = compliance::estimate_xi_probability(
      two_type_mixture(-0.9, 0.2), cfg, 0, 200, rng);
  CHECK(never.probability == 0.0);
}

TEST_CASE("xi monte carlo requires both preference classes") {
  stats::RngStream rng(6);
  compliance::XiConfig cfg{10, 10, 0.1, 0.0, 0.0};
  compliance::TypeMixture all_never;
  all_never.priors.push_back(compliance::make_prior(
      stats::TruncatedGaussian{-0.5, 1.0, -1.0, 1.0}, stats::GaussianBaseline{}));
  all_never.fractions = {1.0};
  CHECK_THROWS_AS(
      compliance::estimate_xi_probability(all_never, cfg, 0, 100, rng),
      ConfigError);
}

TEST_CASE("exploration probability ceiling") {
  CHECK(compliance::exploration_probability_bound(-0.1, 0.2) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(compliance::exploration_probability_bound(-0.3, 1e-9) ==
        doctest::Approx(0.0).epsilon(1e-8));
  CHECK_THROWS_AS(compliance::exploration_probability_bound(0.1, 0.2),
                  NotNeverTakerError);
  // mirrored variant is the sign-flipped twin
  CHECK(compliance::exploration_probability_bound_mirrored(0.1, 0.2) ==
        doctest::Approx(compliance::exploration_probability_bound(-0.1, 0.2))
            .epsilon(1e-12));
}

TEST_CASE("racing threshold") {
  const auto never = compliance::make_prior(
      stats::TruncatedGaussian{-0.5, 1.0, -1.0, 1.0}, stats::GaussianBaseline{});
  const double thr = compliance::racing_threshold(never, 0.43);
  CHECK(std::abs(thr - 0.01882) < 2e-4);
  CHECK(thr == doctest::Approx(0.43 *
                               oracle::truncated_tail(-0.5, 1.0, -1.0, 1.0, 0.43) /
                               4.0)
                   .epsilon(1e-6));

  // a type with no incentivizable tail mass
  const auto hopeless = compliance::make_prior(
      stats::TruncatedGaussian{-0.9, 0.001, -0.95, -0.85},
      stats::GaussianBaseline{});
  CHECK(compliance::racing_threshold(hopeless, 0.43) == 0.0);

  // always-takers gate on the lower tail
  const auto always = compliance::make_prior(
      stats::TruncatedGaussian{0.9, 1.0, -1.0, 1.0}, stats::GaussianBaseline{});
  const double lower_tail =
      1.0 - oracle::truncated_tail(0.9, 1.0, -1.0, 1.0, -0.43);
  CHECK(compliance::racing_threshold(always, 0.43) ==
        doctest::Approx(0.43 * lower_tail / 4.0).epsilon(1e-6));
}

TEST_CASE("delta budget") {
  CHECK(compliance::delta_budget(0.43, 0.0) == 0.0);
  CHECK(compliance::delta_budget(0.43, 0.1751) ==
        doctest::Approx(0.03501).epsilon(1e-4));
  CHECK(compliance::delta_budget(1.0, 1.0) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("minimum sampling length") {
  // noise-free floor: only kappa2 survives
  const double kappa2 = (3.0 - 0.1) * std::sqrt(0.1 * std::log(5.0 / 0.1) /
                                                (2.0 * 0.9));
  CHECK(compliance::minimum_sampling_length(0.25, 0.1, 0.5, 0.0, 0.1) ==
        static_cast<std::uint64_t>(std::ceil(kappa2 * kappa2)));

  const double kappa1 =
      8.0 * std::sqrt(2.0 * std::log(5.0 / 0.1)) / (0.5 * 0.1 * 0.9);
  const double expected = std::ceil(std::pow(kappa1 / 0.25 + kappa2, 2.0));
  const auto ell = compliance::minimum_sampling_length(0.25, 0.1, 0.5, 1.0, 0.1);
  CHECK(static_cast<double>(ell) == expected);
  CHECK(ell > 3.9e6);
  CHECK(ell < 4.0e6);
}

TEST_CASE("full compliance phase") {
  CHECK(compliance::full_compliance_phase(0.25, 0.5, 50, 1.0, 0.1) == 56);
  // enormous tauP leaves only the constant floor term
  const double floor_term =
      std::pow(std::sqrt(50.0 * std::log(5.0 / 0.1)) / (2.0 * 50.0 * 0.5), 2.0);
  CHECK(compliance::full_compliance_phase(1e12, 0.5, 50, 1.0, 0.1) ==
        static_cast<std::uint64_t>(std::ceil(floor_term)));
  // doubling h quarters the un-rounded bound
  const auto q_h = compliance::full_compliance_phase(0.25, 0.5, 50, 1.0, 0.1);
  const auto q_2h = compliance::full_compliance_phase(0.25, 0.5, 100, 1.0, 0.1);
  CHECK(q_2h <= (q_h + 3) / 4 + 1);
  CHECK(4 * q_2h + 4 >= q_h);
}

TEST_CASE("mirrored xi event") {
  compliance::XiConfig cfg{10, 10, 0.1, 1.0, 0.0};
  // treatment mean far below the baseline proxy fires the flipped event
  CHECK(compliance::xi_event_holds_mirrored(0.2, cfg));
  CHECK_FALSE(compliance::xi_event_holds_mirrored(0.6, cfg));
}

TEST_CASE("compliance invariants") {
  for (const auto& result : ivlab_tests::run_invariant_suite("compliance.")) {
    INFO(result.name, ": ", result.detail);
    CHECK(result.passed);
  }
}
