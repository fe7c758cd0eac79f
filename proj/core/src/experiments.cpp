#include "ivlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "ivlab/errors.hpp"
#include "ivlab/estimator.hpp"
#include "ivlab/svg.hpp"

namespace ivlab::harness {

namespace {

using agents::PopulationSpec;
using agents::TypeSpec;
using estimator::SampleSet;
using mechanism::PolicyConfig;
using stats::GaussianBaseline;
using stats::StreamFamily;
using stats::TruncatedGaussian;

TypeSpec make_type(double fraction, double prior_mean, double prior_std,
                   double hyper_mean, double hyper_std, double noise_std) {
  TypeSpec t;
  t.fraction = fraction;
  t.prior = compliance::make_prior(
      TruncatedGaussian{prior_mean, prior_std, -1.0, 1.0},
      GaussianBaseline{hyper_mean, hyper_std, noise_std});
  return t;
}

PopulationSpec reference_population() {
  PopulationSpec pop;
  pop.types.push_back(make_type(0.5, -0.5, 1.0, 0.0, 1.0, 1.0));
  pop.types.push_back(make_type(0.5, 0.9, 1.0, 0.1, 1.0, 1.0));
  return pop;
}

std::vector<std::size_t> never_taker_indices(const PopulationSpec& pop) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pop.types.size(); ++i) {
    if (pop.types[i].prior.preference == compliance::Preference::NeverTaker) {
      out.push_back(i);
    }
  }
  return out;
}

// Mean and standard error across seeds, ignoring non-finite entries only
// when every entry is finite (a single infinite error keeps the mean honest).
std::pair<double, double> mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  if (!std::isfinite(mean)) return {mean, 0.0};
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var = v.size() > 1 ? var / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

std::vector<std::uint64_t> seed_range(std::uint64_t base, std::uint64_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::uint64_t i = 0; i < count; ++i) seeds[i] = base + i;
  return seeds;
}

// Bootstrap sample set for standalone racing runs: alternating
// recommendations with never-takers compliant and always-takers playing
// treatment, mirroring what a compliant prefix of the race produces.
SampleSet racing_bootstrap(const Config& cfg, const StreamFamily& streams,
                           std::uint64_t n0) {
  stats::RngStream realize_rng = streams.make(stats::stream_domain::kRealize, 0);
  const agents::RealizedPopulation realized =
      agents::realize(cfg.population, realize_rng);
  stats::RngStream agent_rng = streams.make(stats::stream_domain::kAgents, 7);
  SampleSet s0;
  s0.arm_count = 1;
  const double theta = cfg.experiment.theta.front();
  for (std::uint64_t t = 0; t < n0; ++t) {
    const agents::AgentDraw agent = agents::draw_agent(realized, t, agent_rng);
    const int z = static_cast<int>(t % 2);
    const bool never = cfg.population.types[agent.type_index].prior.preference ==
                       compliance::Preference::NeverTaker;
    const int x = never ? z : 1;
    const double y = theta * x + agent.baseline_g;
    s0.records.push_back({z, x, y});
  }
  return s0;
}

}  // namespace

Config fig1_config() {
  Config cfg;
  cfg.population = reference_population();
  cfg.policy.rho = 0.001;
  cfg.policy.ell = 100000;
  cfg.policy.ell0 = 100;
  cfg.policy.ell1 = 100;
  // delta must sit below P[xi]/8 (around 2e-3 / 8 here) before Algorithm 1
  // arms; the arming estimate uses extra Monte Carlo iterations so the check
  // is stable across seeds.
  cfg.policy.delta = 1e-4;
  cfg.policy.xi_iterations = 20000;
  cfg.policy.tau = 0.43;
  cfg.policy.h = 50;
  cfg.policy.horizon = 0;
  cfg.experiment.theta = {0.5};
  cfg.experiment.seeds = 5;
  cfg.experiment.checkpoints = {1000, 3000, 10000, 30000, 100000};
  return cfg;
}

Config racing_config() {
  Config cfg;
  cfg.population = reference_population();
  cfg.policy.rho = 0.001;
  cfg.policy.ell0 = 100;
  cfg.policy.ell1 = 100;
  cfg.policy.delta = 0.05;
  cfg.policy.tau = 0.43;
  cfg.policy.h = 50;
  cfg.policy.horizon = 24000;
  cfg.experiment.theta = {0.5};
  cfg.experiment.seeds = 5;
  cfg.experiment.checkpoints = {250, 500, 1000, 2000, 4000, 8000, 16000};
  return cfg;
}

Config regret_scaling_config() {
  Config cfg;
  PopulationSpec pop;
  pop.types.push_back(make_type(0.5, -0.1, 1.0, 0.0, 0.0, 0.02));
  pop.types.push_back(make_type(0.5, 0.5, 1.0, 0.0, 0.0, 0.02));
  cfg.population = pop;
  cfg.policy.rho = 0.4;
  cfg.policy.ell = 0;  // adaptive: run until A crosses the racing threshold
  cfg.policy.ell0 = 100;
  cfg.policy.ell1 = 100;
  cfg.policy.delta = 0.01;
  cfg.policy.tau = 0.3;
  cfg.policy.h = 25;
  cfg.policy.horizon = 40000;
  cfg.experiment.seeds = 20;
  return cfg;
}

Config karm_demo_config() {
  Config cfg;
  PopulationSpec pop;
  for (double base : {0.30, 0.28}) {
    TypeSpec t;
    t.fraction = 0.5;
    t.prior = compliance::make_prior(
        TruncatedGaussian{base, 1.0, -1.0, 1.0},
        GaussianBaseline{0.0, 0.0, 0.12});
    t.prior.arm_priors = {TruncatedGaussian{base, 1.0, -1.0, 1.0},
                          TruncatedGaussian{base - 0.01, 1.0, -1.0, 1.0}};
    pop.types.push_back(t);
  }
  cfg.population = pop;
  cfg.policy.mode = mechanism::PolicyMode::KArm;
  cfg.policy.arm_count = 2;
  cfg.policy.rho = 0.25;
  cfg.policy.ell = 500;
  cfg.policy.delta = 0.05;
  cfg.policy.tau = 0.25;
  cfg.policy.h = 50;
  cfg.policy.horizon = 12000;
  cfg.policy.xi_iterations = 1000;
  cfg.experiment.theta = {0.50, 0.52};
  cfg.experiment.seeds = 1;
  return cfg;
}

Fig1Result run_fig1(std::uint64_t base_seed, const Config& cfg) {
  Fig1Result result;
  result.checkpoints = cfg.experiment.checkpoints;
  if (result.checkpoints.empty()) {
    throw ConfigError("fig1: experiment.checkpoints required");
  }
  const std::uint64_t ell = result.checkpoints.back();
  Config run_cfg = cfg;
  run_cfg.policy.ell = ell;
  const double theta = cfg.experiment.theta.front();
  const auto seeds = seed_range(base_seed, cfg.experiment.seeds);

  for (std::uint64_t seed : seeds) {
    const StreamFamily streams{stats::RngSeed{seed}};
    const mechanism::SamplingResult sampling = mechanism::run_sampling_stage(
        run_cfg.policy, run_cfg.population, theta, streams);

    Fig1SeedDetail detail;
    detail.seed = seed;
    detail.a_star = sampling.log.sampling_a_star;

    // Prefix re-estimation at each checkpoint over the stage-2 records.
    std::uint64_t n = 0, sz = 0, sx = 0, sxz = 0;
    double sy = 0.0, syz = 0.0, syx = 0.0;
    double g1 = 0.0, g0 = 0.0;
    std::uint64_t n1 = 0, n0 = 0;
    std::size_t next_cp = 0;
    const std::uint64_t stage1 = sampling.log.stage1_rounds;
    for (std::uint64_t i = 0; i < sampling.samples.records.size(); ++i) {
      const auto& r = sampling.samples.records[i];
      ++n;
      sz += static_cast<std::uint64_t>(r.z);
      sx += static_cast<std::uint64_t>(r.x);
      sxz += static_cast<std::uint64_t>(r.z & r.x);
      sy += r.y;
      if (r.z == 1) syz += r.y;
      if (r.x == 1) syx += r.y;
      const auto& round = sampling.log.rounds[stage1 + i];
      if (r.x == 1) { g1 += sampling.realized_mu_g[round.type_index]; ++n1; }
      else { g0 += sampling.realized_mu_g[round.type_index]; ++n0; }
      while (next_cp < result.checkpoints.size() &&
             n == result.checkpoints[next_cp]) {
        const double nd = static_cast<double>(n);
        const double den_iv = static_cast<double>(sxz) -
                              static_cast<double>(sx) * static_cast<double>(sz) / nd;
        const double num_iv = syz - static_cast<double>(sz) * sy / nd;
        const double iv = den_iv != 0.0
                              ? num_iv / den_iv
                              : std::numeric_limits<double>::infinity();
        const double den_ols = static_cast<double>(sx) -
                               static_cast<double>(sx) * static_cast<double>(sx) / nd;
        const double num_ols = syx - static_cast<double>(sx) * sy / nd;
        const double ols = den_ols != 0.0
                               ? num_ols / den_ols
                               : std::numeric_limits<double>::infinity();
        detail.iv_err.push_back(std::abs(iv - theta));
        detail.ols_err.push_back(std::abs(ols - theta));
        ++next_cp;
      }
    }
    detail.realized_gap =
        (n1 > 0 ? g1 / static_cast<double>(n1) : 0.0) -
        (n0 > 0 ? g0 / static_cast<double>(n0) : 0.0);
    result.seeds.push_back(std::move(detail));
  }

  result.table.columns = {"ell", "iv_err_mean", "iv_err_se", "ols_err_mean",
                          "ols_err_se"};
  result.table.seed_list = seeds;
  result.table.config_hash = config_hash(run_cfg);
  for (std::size_t c = 0; c < result.checkpoints.size(); ++c) {
    std::vector<double> iv, ols;
    for (const auto& s : result.seeds) {
      iv.push_back(s.iv_err[c]);
      ols.push_back(s.ols_err[c]);
    }
    const auto [ivm, ivs] = mean_se(iv);
    const auto [olsm, olss] = mean_se(ols);
    result.table.rows.push_back(
        {static_cast<double>(result.checkpoints[c]), ivm, ivs, olsm, olss});
  }
  return result;
}

RacingRunDetail run_racing_preset_once(std::uint64_t seed, const Config& cfg) {
  const StreamFamily streams{stats::RngSeed{seed}};
  const SampleSet s0 = racing_bootstrap(cfg, streams, 400);
  mechanism::RacingOptions options;
  options.force_compliant_types = never_taker_indices(cfg.population);
  const mechanism::RacingResult racing = mechanism::run_racing_stage(
      s0, cfg.policy, cfg.population, cfg.experiment.theta.front(), streams,
      options);
  RacingRunDetail detail;
  detail.winner = racing.winner;
  detail.flips = racing.log.flips;
  detail.full_compliance_phases = racing.full_compliance_phases;
  detail.stop_round = racing.log.stop_round;
  detail.log = racing.log;
  return detail;
}

RacingFigResult run_racing_fig(std::uint64_t base_seed, const Config& cfg) {
  RacingFigResult result;
  result.checkpoints = cfg.experiment.checkpoints;
  if (result.checkpoints.empty()) {
    throw ConfigError("racing_fig: experiment.checkpoints required");
  }
  const double theta = cfg.experiment.theta.front();
  const auto seeds = seed_range(base_seed, cfg.experiment.seeds);
  std::vector<std::vector<double>> iv_err(result.checkpoints.size());
  std::vector<std::vector<double>> ols_err(result.checkpoints.size());

  for (std::uint64_t seed : seeds) {
    const StreamFamily streams{stats::RngSeed{seed}};
    const SampleSet s0 = racing_bootstrap(cfg, streams, 400);
    mechanism::RacingOptions options;
    options.force_compliant_types = never_taker_indices(cfg.population);
    const mechanism::RacingResult racing = mechanism::run_racing_stage(
        s0, cfg.policy, cfg.population, theta, streams, options);

    std::uint64_t n = 0, sz = 0, sx = 0, sxz = 0;
    double sy = 0.0, syz = 0.0, syx = 0.0;
    auto add = [&](int z, int x, double y) {
      ++n;
      sz += static_cast<std::uint64_t>(z);
      sx += static_cast<std::uint64_t>(x);
      sxz += static_cast<std::uint64_t>(z & x);
      sy += y;
      if (z == 1) syz += y;
      if (x == 1) syx += y;
    };
    for (const auto& r : s0.records) add(r.z, r.x, r.y);
    std::size_t next_cp = 0;
    std::uint64_t racing_rounds = 0;
    for (const auto& rec : racing.log.rounds) {
      add(rec.z, rec.x, rec.y);
      ++racing_rounds;
      if (next_cp < result.checkpoints.size() &&
          racing_rounds == result.checkpoints[next_cp]) {
        const double nd = static_cast<double>(n);
        const double den_iv = static_cast<double>(sxz) -
                              static_cast<double>(sx) * static_cast<double>(sz) / nd;
        const double num_iv = syz - static_cast<double>(sz) * sy / nd;
        const double den_ols = static_cast<double>(sx) -
                               static_cast<double>(sx) * static_cast<double>(sx) / nd;
        const double num_ols = syx - static_cast<double>(sx) * sy / nd;
        iv_err[next_cp].push_back(
            den_iv != 0.0 ? std::abs(num_iv / den_iv - theta)
                          : std::numeric_limits<double>::infinity());
        ols_err[next_cp].push_back(
            den_ols != 0.0 ? std::abs(num_ols / den_ols - theta)
                           : std::numeric_limits<double>::infinity());
        ++next_cp;
      }
    }
    while (next_cp < result.checkpoints.size()) {
      iv_err[next_cp].push_back(std::nan(""));
      ols_err[next_cp].push_back(std::nan(""));
      ++next_cp;
    }
  }

  result.table.columns = {"round", "iv_err_mean", "iv_err_se", "ols_err_mean",
                          "ols_err_se"};
  result.table.seed_list = seeds;
  result.table.config_hash = config_hash(cfg);
  for (std::size_t c = 0; c < result.checkpoints.size(); ++c) {
    const auto [ivm, ivs] = mean_se(iv_err[c]);
    const auto [olsm, olss] = mean_se(ols_err[c]);
    result.table.rows.push_back(
        {static_cast<double>(result.checkpoints[c]), ivm, ivs, olsm, olss});
  }
  return result;
}

RhoTableResult run_rho_table(std::uint64_t seed,
                             const std::vector<double>& grid,
                             const std::vector<Config>& configs,
                             std::uint64_t iters) {
  if (grid.empty() || grid.size() != configs.size()) {
    throw ConfigError("run_rho_table: grid and configs must align and be non-empty");
  }
  RhoTableResult result;
  result.table.columns = {"x", "p_xi", "p_xi_se", "rho"};
  result.table.seed_list = {seed};
  const StreamFamily streams{stats::RngSeed{seed}};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Config& cfg = configs[i];
    const compliance::TypeMixture mixture = cfg.population.mixture();
    compliance::XiConfig xi;
    xi.ell0 = cfg.policy.ell0;
    xi.ell1 = cfg.policy.ell1;
    xi.delta = cfg.policy.delta;
    xi.sigma_g = 1.0;
    xi.g_gap_bound = mechanism::default_g_gap_bound(cfg.population);
    stats::RngStream rng = streams.make(stats::stream_domain::kXiMonteCarlo, i);
    const compliance::XiEstimate est =
        compliance::estimate_xi_probability(mixture, xi, 0, iters, rng);
    const double mu0 = cfg.population.types[0].prior.prior_mean_theta;
    const double rho =
        est.probability > 0.0
            ? compliance::exploration_probability_bound(mu0, est.probability)
            : 0.0;
    result.table.rows.push_back({grid[i], est.probability, est.std_error, rho});
  }
  result.table.config_hash = config_hash(configs.front());
  return result;
}

RhoTableResult run_rho_table_gap(std::uint64_t seed, std::uint64_t iters) {
  const std::vector<double> grid = {-0.5, -0.4, -0.3, -0.2, -0.1,
                                    0.1,  0.2,  0.3,  0.4,  0.5};
  std::vector<Config> configs;
  for (double gap : grid) {
    Config cfg;
    PopulationSpec pop;
    pop.types.push_back(make_type(0.5, -0.5, 1.0, 0.5 - gap, 1.0, 1.0));
    pop.types.push_back(make_type(0.5, 0.9, 1.0, 0.5, 1.0, 1.0));
    cfg.population = pop;
    cfg.policy.ell0 = 200;
    cfg.policy.ell1 = 200;
    cfg.policy.delta = 0.1;
    configs.push_back(std::move(cfg));
  }
  return run_rho_table(seed, grid, configs, iters);
}

RhoTableResult run_rho_table_variance(std::uint64_t seed, std::uint64_t iters) {
  const std::vector<double> grid = {0.1, 0.2, 0.3, 0.4, 0.5,
                                    0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<Config> configs;
  for (double variance : grid) {
    Config cfg;
    PopulationSpec pop;
    pop.types.push_back(
        make_type(0.5, -0.5, std::sqrt(variance), 0.0, 1.0, 1.0));
    pop.types.push_back(make_type(0.5, 0.9, 1.0, 0.1, 1.0, 1.0));
    cfg.population = pop;
    cfg.policy.ell0 = 200;
    cfg.policy.ell1 = 200;
    cfg.policy.delta = 0.1;
    configs.push_back(std::move(cfg));
  }
  return run_rho_table(seed, grid, configs, iters);
}

CoverageResult run_coverage(std::uint64_t base_seed, std::uint64_t runs,
                            std::uint64_t n, double delta) {
  CoverageResult result;
  result.table.columns = {"seed", "theta", "theta_hat", "bound", "covered"};
  result.table.seed_list = seed_range(base_seed, runs);
  Config meta;
  meta.population = reference_population();
  result.table.config_hash = config_hash(meta);
  result.total = runs;
  for (std::uint64_t i = 0; i < runs; ++i) {
    const StreamFamily streams{stats::RngSeed{base_seed + i}};
    stats::RngStream rng = streams.make(stats::stream_domain::kAgents, 0);
    const double theta = -1.0 + 2.0 * rng.uniform01();
    SampleSet s;
    s.arm_count = 1;
    for (std::uint64_t t = 0; t < n; ++t) {
      const int z = rng.uniform01() < 0.5 ? 1 : 0;
      const int x = z;  // fully compliant population
      const double g = stats::sample_normal(0.0, 1.0, rng);
      s.records.push_back({z, x, theta * x + g});
    }
    const double theta_hat = estimator::wald_estimate(s);
    const double bound = estimator::approximation_bound_binary(s, delta, 1.0);
    const bool covered = std::abs(theta_hat - theta) <= bound;
    if (covered) ++result.covered;
    result.table.rows.push_back({static_cast<double>(base_seed + i), theta,
                                 theta_hat, bound, covered ? 1.0 : 0.0});
  }
  return result;
}

RegretScalingResult run_regret_scaling(std::uint64_t base_seed,
                                       std::uint64_t seeds_per_horizon) {
  const Config cfg = regret_scaling_config();
  RegretScalingResult result;
  result.horizons = {1000, 4000, 16000};
  result.table.columns = {"horizon", "regret_mean", "regret_se"};
  result.table.seed_list = seed_range(base_seed, seeds_per_horizon);
  result.table.config_hash = config_hash(cfg);

  for (std::uint64_t horizon : result.horizons) {
    // Horizon-matched effect size: the sqrt(T) regret regime is exhibited at
    // theta below the achievable bound at T, so the race spans the horizon.
    const double theta = 0.35 / std::sqrt(static_cast<double>(horizon));
    std::vector<double> regrets;
    for (std::uint64_t i = 0; i < seeds_per_horizon; ++i) {
      const StreamFamily streams{stats::RngSeed{base_seed + i}};
      const mechanism::SamplingResult sampling = mechanism::run_sampling_stage(
          cfg.policy, cfg.population, theta, streams);
      mechanism::RacingOptions options;
      options.round_budget = horizon;
      const mechanism::RacingResult racing = mechanism::run_racing_stage(
          sampling.samples, cfg.policy, cfg.population, theta, streams,
          options);
      regrets.push_back(
          mechanism::pseudo_regret(racing.log, {theta}).pseudo_regret);
    }
    const auto [mean, se] = mean_se(regrets);
    result.mean_regret.push_back(mean);
    result.table.rows.push_back({static_cast<double>(horizon), mean, se});
  }
  return result;
}

KarmDemoResult run_karm_demo(std::uint64_t seed) {
  const Config cfg = karm_demo_config();
  const StreamFamily streams{stats::RngSeed{seed}};
  const mechanism::SamplingResult sampling = mechanism::run_sampling_stage_k(
      cfg.policy, cfg.population, cfg.experiment.theta, streams);
  mechanism::RacingOptions options;
  options.round_budget = cfg.policy.horizon - sampling.log.rounds.size();
  const mechanism::RacingResult racing = mechanism::run_racing_stage_k(
      sampling.samples, cfg.policy, cfg.population, cfg.experiment.theta,
      streams, options);

  KarmDemoResult result;
  result.winner = racing.winner;
  result.table.columns = {"phase", "a_bound", "pairwise_bound", "theta_hat_1",
                          "theta_hat_2"};
  result.table.seed_list = {seed};
  result.table.config_hash = config_hash(cfg);
  for (const auto& phase : racing.log.phases) {
    result.table.rows.push_back({static_cast<double>(phase.q), phase.a_bound,
                                 estimator::pairwise_bound(phase.a_bound),
                                 phase.theta_hat[0], phase.theta_hat[1]});
  }
  if (result.table.rows.empty()) {
    // Immediate elimination: record the entry state as phase 0.
    result.table.rows.push_back(
        {0.0, racing.final_estimate.bound,
         estimator::pairwise_bound(racing.final_estimate.bound),
         racing.final_estimate.theta[0], racing.final_estimate.theta[1]});
  }
  return result;
}

std::string render_constants(const Config& cfg, std::uint64_t seed) {
  const StreamFamily streams{stats::RngSeed{seed}};
  const mechanism::PolicyConstants constants =
      mechanism::compute_policy_constants(cfg.policy, cfg.population, streams);
  std::ostringstream out;
  out << "sigma_g: " << format_double(constants.sigma_g) << '\n';
  out << "g_gap_bound: " << format_double(constants.g_gap_bound) << '\n';
  out << "p_xi: " << format_double(constants.xi_estimate.probability) << " +- "
      << format_double(constants.xi_estimate.std_error) << " ("
      << constants.xi_estimate.iterations << " iterations)" << '\n';
  for (std::size_t i = 0; i < cfg.population.types.size(); ++i) {
    out << "type " << i << ":" << '\n';
    out << "  preference: "
        << (cfg.population.types[i].prior.preference ==
                    compliance::Preference::NeverTaker
                ? "never_taker" : "always_taker")
        << '\n';
    out << "  prior_mean_theta: "
        << format_double(cfg.population.types[i].prior.prior_mean_theta) << '\n';
    if (!std::isnan(constants.rho_ceilings[i])) {
      out << "  rho_ceiling: " << format_double(constants.rho_ceilings[i])
          << '\n';
      out << "  sampling_certificate: "
          << (constants.sampling_certificates[i] ? "true" : "false") << '\n';
    }
    out << "  racing_threshold: " << format_double(constants.racing_thresholds[i])
        << '\n';
    out << "  delta_budget: " << format_double(constants.racing_delta_budgets[i])
        << '\n';
    out << "  minimum_ell: " << format_double(constants.minimum_ells[i]) << '\n';
  }
  out << "sampling_compliant_mass: "
      << format_double(constants.sampling_compliant_mass) << '\n';
  return out.str();
}

std::vector<std::string> preset_names() {
  return {"fig1",     "racing_fig",     "rho_table_gap", "rho_table_variance",
          "coverage", "regret_scaling", "karm_demo"};
}

std::vector<std::string> run_preset(const std::string& name,
                                    std::uint64_t seed,
                                    const std::string& out_dir,
                                    const std::optional<Config>& override_cfg) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("run_preset: cannot create out dir '" + out_dir + "'");
  auto path_for = [&](const std::string& stem, const char* ext) {
    return (fs::path(out_dir) / (stem + ext)).string();
  };
  std::vector<std::string> written;

  auto emit_curve_svg = [&](const ResultTable& table, const std::string& stem,
                            const std::string& title, bool log_y) {
    SvgSeries iv{"IV", {}};
    SvgSeries ols{"OLS", {}};
    for (const auto& row : table.rows) {
      iv.points.emplace_back(row[0], row[1]);
      ols.points.emplace_back(row[0], row[3]);
    }
    SvgChartSpec spec;
    spec.title = title;
    spec.x_label = table.columns[0];
    spec.y_label = "absolute error";
    spec.log_y = log_y;
    const std::string path = path_for(stem, ".svg");
    write_svg_chart(spec, {iv, ols}, path);
    written.push_back(path);
  };

  if (name == "fig1") {
    const Fig1Result r = run_fig1(seed, override_cfg.value_or(fig1_config()));
    const std::string csv = path_for("fig1", ".csv");
    emit_result_table(r.table, csv);
    written.push_back(csv);
    emit_curve_svg(r.table, "fig1", "IV vs OLS error, sampling stage", false);
  } else if (name == "racing_fig") {
    const RacingFigResult r =
        run_racing_fig(seed, override_cfg.value_or(racing_config()));
    const std::string csv = path_for("racing_fig", ".csv");
    emit_result_table(r.table, csv);
    written.push_back(csv);
    emit_curve_svg(r.table, "racing_fig", "IV vs OLS error, racing stage", true);
  } else if (name == "rho_table_gap") {
    const RhoTableResult r = run_rho_table_gap(seed, 1000);
    const std::string csv = path_for("rho_table_gap", ".csv");
    emit_result_table(r.table, csv);
    written.push_back(csv);
  } else if (name == "rho_table_variance") {
    const RhoTableResult r = run_rho_table_variance(seed, 1000);
    const std::string csv = path_for("rho_table_variance", ".csv");
    emit_result_table(r.table, csv);
    written.push_back(csv);
  } else if (name == "coverage") {
    const CoverageResult r = run_coverage(seed, 200, 1000, 0.1);
    const std::string csv = path_for("coverage", ".csv");
    emit_result_table(r.table, csv);
    written.push_back(csv);
  } else if (name == "regret_scaling") {
    const RegretScalingResult r = run_regret_scaling(seed, 20);
    const std::string csv = path_for("regret_scaling", ".csv");
    emit_result_table(r.table, csv);
    written.push_back(csv);
  } else if (name == "karm_demo") {
    const KarmDemoResult r = run_karm_demo(seed);
    const std::string csv = path_for("karm_demo", ".csv");
    emit_result_table(r.table, csv);
    written.push_back(csv);
  } else {
    throw ConfigError("run_preset: unknown preset '" + name + "'");
  }
  return written;
}

}  // namespace ivlab::harness
