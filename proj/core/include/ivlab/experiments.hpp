#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ivlab/config.hpp"
#include "ivlab/csv.hpp"
#include "ivlab/mechanism.hpp"

namespace ivlab::harness {

// Built-in configurations. fig1/racing use the reference priors: theta
// priors TruncN(-0.5, 1) and TruncN(0.9, 1) on [-1, 1], baseline hyper-means
// 0 and 0.1 with unit hyper and noise spread, equal type fractions.
Config fig1_config();
Config racing_config();
Config regret_scaling_config();
Config karm_demo_config();

struct Fig1SeedDetail {
  std::uint64_t seed = 0;
  std::vector<double> iv_err;
  std::vector<double> ols_err;
  double realized_gap = 0.0;  // E[g | x=1] - E[g | x=0] at the final checkpoint
  int a_star = 0;
};

struct Fig1Result {
  ResultTable table;  // ell, iv_err_mean, iv_err_se, ols_err_mean, ols_err_se
  std::vector<std::uint64_t> checkpoints;
  std::vector<Fig1SeedDetail> seeds;
};

Fig1Result run_fig1(std::uint64_t base_seed, const Config& cfg);

struct RacingFigResult {
  ResultTable table;  // round, iv_err_mean, iv_err_se, ols_err_mean, ols_err_se
  std::vector<std::uint64_t> checkpoints;
};

RacingFigResult run_racing_fig(std::uint64_t base_seed, const Config& cfg);

// One racing run under the racing preset semantics (never-taker types are
// assumed compliant at entry, matching the experiment's setup).
struct RacingRunDetail {
  std::optional<int> winner;
  std::vector<mechanism::FlipEvent> flips;
  std::vector<double> full_compliance_phases;
  std::uint64_t stop_round = 0;
  mechanism::TrajectoryLog log;
};

RacingRunDetail run_racing_preset_once(std::uint64_t seed, const Config& cfg);

struct RhoTableResult {
  ResultTable table;  // x, p_xi, p_xi_se, rho
};

// One row per grid point: the parameter value, the Monte Carlo P[xi] with
// its standard error, and the implied exploration-probability ceiling.
RhoTableResult run_rho_table(std::uint64_t seed,
                             const std::vector<double>& grid,
                             const std::vector<Config>& configs,
                             std::uint64_t iters);

RhoTableResult run_rho_table_gap(std::uint64_t seed, std::uint64_t iters);
RhoTableResult run_rho_table_variance(std::uint64_t seed, std::uint64_t iters);

struct CoverageResult {
  ResultTable table;  // seed, theta, theta_hat, bound, covered
  std::uint64_t covered = 0;
  std::uint64_t total = 0;
};

CoverageResult run_coverage(std::uint64_t base_seed, std::uint64_t runs,
                            std::uint64_t n, double delta);

struct RegretScalingResult {
  ResultTable table;  // horizon, regret_mean, regret_se
  std::vector<std::uint64_t> horizons;
  std::vector<double> mean_regret;
};

RegretScalingResult run_regret_scaling(std::uint64_t base_seed,
                                       std::uint64_t seeds_per_horizon);

struct KarmDemoResult {
  ResultTable table;  // phase, a_bound, pairwise_bound, active, theta_hat_1..k
  std::optional<int> winner;
};

KarmDemoResult run_karm_demo(std::uint64_t seed);

// Compliance-calculus dump used by the `constants` subcommand.
std::string render_constants(const Config& cfg, std::uint64_t seed);

// Runs a preset by name, writes its CSV (and SVG for curve presets) into
// out_dir, and returns the created file paths.
std::vector<std::string> run_preset(const std::string& name,
                                    std::uint64_t seed,
                                    const std::string& out_dir,
                                    const std::optional<Config>& override_cfg);

std::vector<std::string> preset_names();

}  // namespace ivlab::harness
