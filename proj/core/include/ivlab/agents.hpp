#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ivlab/compliance.hpp"
#include "ivlab/rng.hpp"

namespace ivlab::agents {

struct TypeSpec {
  compliance::PriorSpec prior;
  double fraction = 0.0;
};

// The agent type mixture. Fractions must sum to 1. p0/p1 aggregate the
// never-taker and always-taker mass respectively.
struct PopulationSpec {
  std::vector<TypeSpec> types;

  void validate() const;
  double p0() const;
  double p1() const;
  std::size_t size() const { return types.size(); }
  compliance::TypeMixture mixture() const;
};

// A population with its run-level baseline means mu_g drawn. One realization
// per policy run, so the OLS confounding bias is a per-run constant.
struct RealizedPopulation {
  PopulationSpec spec;
  std::vector<double> mu_g;
};

RealizedPopulation realize(const PopulationSpec& pop, stats::RngStream& rng);

struct AgentDraw {
  std::size_t type_index = 0;
  double baseline_g = 0.0;
  std::uint64_t round = 0;
};

AgentDraw draw_agent(const RealizedPopulation& pop, std::uint64_t t,
                     stats::RngStream& rng);

enum class BehaviorMode { TheoryDriven, BayesMc };

// Simulates the published policy for a hypothetical treatment effect (size 1
// in binary mode, size k otherwise) and returns the recommendation the
// agent's round would receive. Drives the Bayes-MC rejection sampler.
using PolicySimulator =
    std::function<int(const std::vector<double>& theta, stats::RngStream&)>;

struct BehaviorModel {
  BehaviorMode mode = BehaviorMode::TheoryDriven;
  std::uint64_t posterior_samples = 2000;
  PolicySimulator simulator;  // required for BayesMc
};

// Preferred arm absent any recommendation: treatment iff the prior mean is
// positive (binary), arm 1 in k-arm mode.
int preferred_arm(const compliance::PriorSpec& prior, int arm_count);

// Per-arm posterior means of theta given an observed recommendation,
// estimated by rejection sampling against the policy simulator.
struct PosteriorEstimate {
  std::vector<double> mean;
  std::uint64_t accepted = 0;
  double std_error = 0.0;  // of mean[0]
};

PosteriorEstimate bayes_posterior_mean(const compliance::PriorSpec& prior,
                                       int arm_count, int observed_z,
                                       const PolicySimulator& simulator,
                                       std::uint64_t samples,
                                       stats::RngStream& rng);

// Action selection. THEORY_DRIVEN follows the recommendation exactly when
// the compliance certificate for the agent's type holds, otherwise plays the
// prior-preferred arm. BAYES_MC estimates E[theta | z, t] by posterior
// simulation and plays the sign rule (binary) or argmax rule (k-arm).
int agent_action(const AgentDraw& agent, const RealizedPopulation& pop,
                 std::optional<int> recommendation,
                 const std::vector<bool>& certificates,
                 const BehaviorModel& model, int arm_count,
                 stats::RngStream& bayes_rng);

// Reward equation: y = theta x + g (binary) or y = theta[arm] + g (k-arm,
// 1-based arm indices; arm 0 is control and contributes nothing).
double reward(const std::vector<double>& theta, int action, double baseline_g);

}  // namespace ivlab::agents
