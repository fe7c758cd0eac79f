#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "ivlab/agents.hpp"
#include "ivlab/compliance.hpp"
#include "ivlab/estimator.hpp"
#include "ivlab/rng.hpp"

namespace ivlab::mechanism {

enum class PolicyMode { Binary, KArm };

// Extension 2: which initial preference class the sampling stage works on.
// The mirrored mode recommends control while exploring and flips the
// first-stage event.
enum class Incentivize { NeverTakers, AlwaysTakers };

// All planner knobs. ell == 0 selects the adaptive second stage that runs
// until the empirical approximation bound crosses the best racing threshold
// instead of the (astronomically conservative) theoretical length.
struct PolicyConfig {
  double rho = 0.001;
  std::uint64_t ell = 0;
  std::uint64_t ell0 = 100;
  std::uint64_t ell1 = 100;
  double delta = 0.05;
  std::optional<double> g_gap_bound;
  std::uint64_t h = 50;
  double tau = 0.43;
  std::uint64_t horizon = 0;
  int arm_count = 1;
  PolicyMode mode = PolicyMode::Binary;
  Incentivize incentivize = Incentivize::NeverTakers;
  std::optional<double> sigma_g_override;
  std::uint64_t xi_iterations = 1000;
  std::size_t compliant_type = 0;

  void validate() const;
};

enum class Stage { SamplingFirst, SamplingSecond, RacingPhase, Exploit };

struct RoundRecord {
  std::uint64_t t = 0;
  Stage stage = Stage::SamplingFirst;
  std::uint64_t phase = 0;
  std::size_t type_index = 0;
  int z = -1;  // -1: no recommendation issued
  int x = 0;
  double y = 0.0;
  double baseline_g = 0.0;
  bool complied = false;
  bool explore = false;
};

struct PhaseStat {
  std::uint64_t q = 0;
  double a_bound = 0.0;      // A_q, over the best sample set so far
  std::uint64_t best_index = 0;
  std::vector<double> theta_hat;
};

struct FlipEvent {
  enum class Route { Empirical, Theoretical };
  std::size_t type_index = 0;
  std::uint64_t round = 0;
  std::uint64_t phase = 0;
  Route route = Route::Empirical;
};

struct TrajectoryLog {
  std::vector<RoundRecord> rounds;
  std::vector<PhaseStat> phases;
  std::vector<FlipEvent> flips;
  std::optional<int> winner;
  int sampling_a_star = -1;
  std::uint64_t stage1_rounds = 0;
  std::uint64_t stage2_rounds = 0;
  std::uint64_t stop_round = 0;  // first exploit round; rounds.size() if none
};

struct RegretReport {
  double pseudo_regret = 0.0;
  std::map<std::size_t, double> per_type;
  std::vector<double> cumulative;
};

// Every prior-dependent constant the planner derives before committing to a
// policy: P[xi] Monte Carlo estimate, per-type exploration ceilings and
// sampling certificates, racing thresholds with their delta budgets, and the
// theoretical minimum sampling lengths.
struct PolicyConstants {
  double sigma_g = 1.0;
  double g_gap_bound = 0.0;
  compliance::XiConfig xi_config;
  compliance::XiEstimate xi_estimate;
  std::vector<double> rho_ceilings;
  std::vector<bool> sampling_certificates;
  std::vector<double> racing_thresholds;
  std::vector<double> racing_delta_budgets;
  std::vector<double> minimum_ells;
  double sampling_compliant_mass = 0.0;
};

PolicyConstants compute_policy_constants(const PolicyConfig& cfg,
                                         const agents::PopulationSpec& pop,
                                         const stats::StreamFamily& streams);

// Default baseline-gap bound G^(0) when the config leaves it unset: the
// class-weighted hyper-mean gap plus twice the combined hyper spread.
double default_g_gap_bound(const agents::PopulationSpec& pop);

struct SamplingResult {
  estimator::SampleSet samples;  // instrumented second-stage records
  TrajectoryLog log;
  PolicyConstants constants;
  std::vector<double> realized_mu_g;  // per-type run-level baseline means
};

SamplingResult run_sampling_stage(const PolicyConfig& cfg,
                                  const agents::PopulationSpec& pop,
                                  double theta,
                                  const stats::StreamFamily& streams,
                                  const agents::BehaviorModel& behavior = {});

struct RacingOptions {
  std::vector<std::size_t> force_compliant_types;
  std::uint64_t round_budget = 0;  // 0: use cfg.horizon
};

struct RacingResult {
  TrajectoryLog log;
  std::optional<int> winner;
  estimator::EstimateWithBound final_estimate;
  std::vector<bool> initial_certificates;
  std::vector<double> full_compliance_phases;  // per type; +inf when n/a
};

RacingResult run_racing_stage(const estimator::SampleSet& s0,
                              const PolicyConfig& cfg,
                              const agents::PopulationSpec& pop, double theta,
                              const stats::StreamFamily& streams,
                              const RacingOptions& options = {},
                              const agents::BehaviorModel& behavior = {});

struct CombinedResult {
  TrajectoryLog log;
  RegretReport regret;
  std::optional<int> winner;
  estimator::EstimateWithBound final_estimate;
  std::uint64_t sampling_rounds = 0;
  PolicyConstants constants;
};

CombinedResult run_combined_policy(const PolicyConfig& cfg,
                                   const agents::PopulationSpec& pop,
                                   double theta,
                                   const stats::StreamFamily& streams,
                                   const agents::BehaviorModel& behavior = {});

// k-treatment generalizations. theta holds one effect per arm; every type
// must carry k arm priors with strictly decreasing means.
SamplingResult run_sampling_stage_k(const PolicyConfig& cfg,
                                    const agents::PopulationSpec& pop,
                                    const std::vector<double>& theta,
                                    const stats::StreamFamily& streams,
                                    const agents::BehaviorModel& behavior = {});

RacingResult run_racing_stage_k(const estimator::SampleSet& s0,
                                const PolicyConfig& cfg,
                                const agents::PopulationSpec& pop,
                                const std::vector<double>& theta,
                                const stats::StreamFamily& streams,
                                const RacingOptions& options = {},
                                const agents::BehaviorModel& behavior = {});

CombinedResult run_combined_policy_k(const PolicyConfig& cfg,
                                     const agents::PopulationSpec& pop,
                                     const std::vector<double>& theta,
                                     const stats::StreamFamily& streams,
                                     const agents::BehaviorModel& behavior = {});

// T max(theta, 0) - sum_t theta x_t (binary) or the k-arm analogue against
// the best coordinate; the per-type split sums the same addends filtered by
// the arriving type.
RegretReport pseudo_regret(const TrajectoryLog& log,
                           const std::vector<double>& theta);

// Posterior simulator for Bayes-MC agents in the second sampling stage:
// replays the first stage under a hypothetical theta and returns the
// recommendation an agent of that round would see.
agents::PolicySimulator make_sampling_stage_simulator(
    const PolicyConfig& cfg, const agents::PopulationSpec& pop,
    const PolicyConstants& constants);

// Full-pipeline posterior simulator for rounds inside the racing stage of
// the combined policy: replays a fresh run (with theory-driven inner agents)
// under the hypothetical theta and reports the recommendation at `round`.
// Costs one pipeline replay per posterior draw; intended for desk-scale
// diagnostics.
agents::PolicySimulator make_combined_policy_simulator(
    const PolicyConfig& cfg, const agents::PopulationSpec& pop,
    const PolicyConstants& constants, std::uint64_t round);

}  // namespace ivlab::mechanism
