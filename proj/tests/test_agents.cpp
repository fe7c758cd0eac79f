#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "common/invariants.hpp"
#include "ivlab/agents.hpp"
#include "ivlab/errors.hpp"

using namespace ivlab;

namespace {

agents::PopulationSpec two_types() {
  agents::PopulationSpec pop;
  agents::TypeSpec never;
  never.fraction = 0.5;
  never.prior = compliance::make_prior(
      stats::TruncatedGaussian{-0.5, 1.0, -1.0, 1.0}, stats::GaussianBaseline{});
  agents::TypeSpec always;
  always.fraction = 0.5;
  always.prior = compliance::make_prior(
      stats::TruncatedGaussian{0.9, 1.0, -1.0, 1.0}, stats::GaussianBaseline{});
  pop.types = {never, always};
  return pop;
}

}  // namespace

TEST_CASE("population validation") {
  agents::PopulationSpec pop = two_types();
  CHECK(pop.p0() == doctest::Approx(0.5));
  CHECK(pop.p1() == doctest::Approx(0.5));
  pop.types[0].fraction = 0.6;
  CHECK_THROWS_AS(pop.validate(), ConfigError);
}

TEST_CASE("draw_agent respects the type mixture") {
  agents::PopulationSpec single;
  single.types.push_back({compliance::make_prior(
                              stats::TruncatedGaussian{-0.5, 1.0, -1.0, 1.0},
                              stats::GaussianBaseline{}),
                          1.0});
  stats::RngStream rng(4);
  const auto realized_single = agents::realize(single, rng);
  for (int i = 0; i < 200; ++i) {
    CHECK(agents::draw_agent(realized_single, i, rng).type_index == 0);
  }

  const auto pop = two_types();
  const auto realized = agents::realize(pop, rng);
  const int n = 100000;
  int type0 = 0;
  for (int i = 0; i < n; ++i) {
    if (agents::draw_agent(realized, i, rng).type_index == 0) ++type0;
  }
  const double fraction = static_cast<double>(type0) / n;
  const double sigma = std::sqrt(0.25 / n);
  CHECK(std::abs(fraction - 0.5) < 3.0 * sigma);
}

TEST_CASE("theory-driven action selection") {
  const auto pop = two_types();
  stats::RngStream rng(8);
  auto realized = agents::realize(pop, rng);
  stats::RngStream bayes_rng(9);
  agents::AgentDraw never{0, 0.0, 0};
  agents::AgentDraw always{1, 0.0, 0};

  // no recommendation: prior preference
  CHECK(agents::agent_action(never, realized, std::nullopt, {false, false}, {},
                             1, bayes_rng) == 0);
  CHECK(agents::agent_action(always, realized, std::nullopt, {false, false}, {},
                             1, bayes_rng) == 1);
  // certificate holds: compliance
  CHECK(agents::agent_action(never, realized, 1, {true, false}, {}, 1,
                             bayes_rng) == 1);
  // certificate absent: the recommendation is ignored
  CHECK(agents::agent_action(always, realized, 0, {true, false}, {}, 1,
                             bayes_rng) == 1);
  // k-arm fallback is arm 1
  realized.spec.types[0].prior.arm_priors = {
      stats::TruncatedGaussian{0.3, 1.0, -1.0, 1.0},
      stats::TruncatedGaussian{0.2, 1.0, -1.0, 1.0}};
  CHECK(agents::agent_action(never, realized, std::nullopt, {false, false}, {},
                             2, bayes_rng) == 1);
}

TEST_CASE("reward equation") {
  CHECK(agents::reward({0.5}, 0, 0.3) == doctest::Approx(0.3));
  CHECK(agents::reward({0.5}, 1, 0.3) == doctest::Approx(0.8));
  CHECK(agents::reward({0.1, 0.2, 0.3}, 2, -0.05) == doctest::Approx(0.15));
  CHECK_THROWS_AS(agents::reward({0.5}, 2, 0.0), ConfigError);
}

TEST_CASE("bayes posterior falls back to the prior with no acceptances") {
  const auto prior = compliance::make_prior(
      stats::TruncatedGaussian{-0.5, 1.0, -1.0, 1.0}, stats::GaussianBaseline{});
  stats::RngStream rng(10);
  const auto post = agents::bayes_posterior_mean(
      prior, 1, 1, [](const std::vector<double>&, stats::RngStream&) { return 0; },
      100, rng);
  CHECK(post.accepted == 0);
  CHECK(post.mean[0] == doctest::Approx(prior.prior_mean_theta));
}

TEST_CASE("agents invariants") {
  for (const auto& result : ivlab_tests::run_invariant_suite("agents.")) {
    INFO(result.name, ": ", result.detail);
    CHECK(result.passed);
  }
}
