#include "ivlab/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ivlab/errors.hpp"
#include "ivlab/linalg.hpp"

namespace ivlab::mechanism {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using agents::AgentDraw;
using agents::BehaviorModel;
using agents::RealizedPopulation;
using estimator::SampleRecord;
using estimator::SampleSet;
using stats::RngStream;
using stats::StreamFamily;
namespace domain = stats::stream_domain;

// Incrementally maintained sums for the binary Wald estimator and its bound.
struct RunningBinary {
  std::uint64_t n = 0;
  std::uint64_t sz = 0;
  std::uint64_t sx = 0;
  std::uint64_t sxz = 0;
  double sy = 0.0;
  double syz = 0.0;

  void add(int z, int x, double y) {
    ++n;
    sz += static_cast<std::uint64_t>(z);
    sx += static_cast<std::uint64_t>(x);
    sxz += static_cast<std::uint64_t>(z & x);
    sy += y;
    if (z == 1) syz += y;
  }

  double denominator() const {
    if (n == 0) return 0.0;
    return static_cast<double>(sxz) -
           static_cast<double>(sx) * static_cast<double>(sz) /
               static_cast<double>(n);
  }

  double wald() const {
    const double den = denominator();
    const double num = syz - static_cast<double>(sz) * sy / static_cast<double>(n);
    return num / den;
  }

  double bound(double delta, double sigma_g) const {
    const double den = std::abs(denominator());
    if (den == 0.0 || n == 0) return kInf;
    return 2.0 * sigma_g *
           std::sqrt(2.0 * static_cast<double>(n) * std::log(2.0 / delta)) / den;
  }
};

// Incrementally maintained interaction matrix for the k-arm estimator.
struct RunningKArm {
  int k = 0;
  std::vector<double> m;    // row-major k x k, m[z-1][x-1]
  std::vector<double> rhs;  // per recommended arm
  std::uint64_t n = 0;

  explicit RunningKArm(int arms)
      : k(arms), m(static_cast<std::size_t>(arms) * arms, 0.0),
        rhs(static_cast<std::size_t>(arms), 0.0) {}

  void add(int z, int x, double y) {
    ++n;
    m[static_cast<std::size_t>(z - 1) * k + (x - 1)] += 1.0;
    rhs[static_cast<std::size_t>(z - 1)] += y;
  }

  linalg::Matrix matrix() const {
    linalg::Matrix out(static_cast<std::size_t>(k));
    out.a = m;
    return out;
  }

  double bound(double delta, double sigma_g) const {
    const linalg::Matrix mat = matrix();
    const double smin = linalg::min_singular_value(mat);
    const double smax = linalg::max_singular_value(mat);
    if (smin <= 1e-12 * std::max(smax, 1.0) || n == 0) return kInf;
    return sigma_g *
           std::sqrt(2.0 * static_cast<double>(n) * k * std::log(k / delta)) /
           smin;
  }

  bool estimate(std::vector<double>& theta) const {
    return linalg::solve(matrix(), rhs, theta);
  }
};

double resolve_sigma_g(const PolicyConfig& cfg,
                       const agents::PopulationSpec& pop) {
  if (cfg.sigma_g_override) {
    if (*cfg.sigma_g_override < 0.0) throw ConfigError("sigma_g override must be >= 0");
    return *cfg.sigma_g_override;
  }
  double sigma = 0.0;
  for (const auto& t : pop.types) sigma = std::max(sigma, t.prior.baseline.noise_std);
  return sigma;
}

}  // namespace

// Default G^(0): zero when the class-weighted baseline hyper-means agree and
// carry no hyper spread, otherwise the hyper-mean gap plus a 2x multiple of
// the combined hyper spread. The multiple is calibrated so the Monte Carlo
// P[xi] lands in the regime the exploration tables report.
double default_g_gap_bound(const agents::PopulationSpec& pop) {
  double never_mass = 0.0, always_mass = 0.0;
  double never_mean = 0.0, always_mean = 0.0;
  double never_spread = 0.0, always_spread = 0.0;
  for (const auto& t : pop.types) {
    if (t.prior.preference == compliance::Preference::NeverTaker) {
      never_mass += t.fraction;
      never_mean += t.fraction * t.prior.baseline.hyper_mean;
      never_spread = std::max(never_spread, t.prior.baseline.hyper_std);
    } else {
      always_mass += t.fraction;
      always_mean += t.fraction * t.prior.baseline.hyper_mean;
      always_spread = std::max(always_spread, t.prior.baseline.hyper_std);
    }
  }
  if (never_mass > 0.0) never_mean /= never_mass;
  if (always_mass > 0.0) always_mean /= always_mass;
  const double gap = always_mean - never_mean;
  const double spread = std::sqrt(never_spread * never_spread +
                                  always_spread * always_spread);
  if (gap == 0.0 && spread == 0.0) return 0.0;
  return gap + 2.0 * spread;
}

namespace {

std::uint64_t explore_count_or_throw(double rho, std::uint64_t ell) {
  const double raw = rho * static_cast<double>(ell);
  const double rounded = std::round(raw);
  if (std::abs(raw - rounded) > 1e-9 * std::max(1.0, raw)) {
    throw ConfigError("PolicyConfig: rho * ell must be an integer");
  }
  return static_cast<std::uint64_t>(rounded);
}

// Draws `count` distinct positions out of `total` by partial Fisher-Yates.
std::vector<bool> pick_explore_rounds(std::uint64_t total, std::uint64_t count,
                                      RngStream& rng) {
  std::vector<std::uint64_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t j = i + rng.uniform_below(total - i);
    std::swap(idx[i], idx[j]);
  }
  std::vector<bool> flags(total, false);
  for (std::uint64_t i = 0; i < count; ++i) flags[idx[i]] = true;
  return flags;
}

struct RoundContext {
  const PolicyConfig* cfg;
  const RealizedPopulation* pop;
  const BehaviorModel* behavior;
  const std::vector<bool>* certificates;
  RngStream* agent_rng;
  const StreamFamily* streams;
  int arm_count = 1;
  // Binds a posterior simulator to the current round for Bayes-MC agents
  // whose model does not carry one (racing rounds of the combined policy).
  std::function<agents::PolicySimulator(std::uint64_t)> simulator_factory;
};

// Plays one round: draws the agent, lets it act on the recommendation and
// appends the record. Returns the record just written.
const RoundRecord& play_round(TrajectoryLog& log, const RoundContext& ctx,
                              std::uint64_t t, Stage stage, std::uint64_t phase,
                              std::optional<int> z, bool explore,
                              const std::vector<double>& theta) {
  AgentDraw agent = agents::draw_agent(*ctx.pop, t, *ctx.agent_rng);
  RngStream bayes_rng = ctx.streams->make(domain::kBayes, t);
  const BehaviorModel* model = ctx.behavior;
  BehaviorModel bound_model;
  if (model->mode == agents::BehaviorMode::BayesMc && !model->simulator &&
      ctx.simulator_factory) {
    bound_model = *model;
    bound_model.simulator = ctx.simulator_factory(t);
    model = &bound_model;
  }
  const int x = agents::agent_action(agent, *ctx.pop, z, *ctx.certificates,
                                     *model, ctx.arm_count, bayes_rng);
  RoundRecord rec;
  rec.t = t;
  rec.stage = stage;
  rec.phase = phase;
  rec.type_index = agent.type_index;
  rec.z = z.value_or(-1);
  rec.x = x;
  rec.baseline_g = agent.baseline_g;
  rec.y = agents::reward(theta, x, agent.baseline_g);
  rec.complied = z.has_value() && x == *z;
  rec.explore = explore;
  log.rounds.push_back(rec);
  return log.rounds.back();
}

std::vector<double> racing_thresholds_for(const agents::PopulationSpec& pop,
                                          double tau) {
  std::vector<double> out;
  out.reserve(pop.types.size());
  for (const auto& t : pop.types) {
    out.push_back(compliance::racing_threshold(t.prior, tau));
  }
  return out;
}

std::vector<double> delta_budgets_for(const agents::PopulationSpec& pop,
                                      double tau) {
  std::vector<double> out;
  out.reserve(pop.types.size());
  for (const auto& t : pop.types) {
    const double thr = compliance::racing_threshold(t.prior, tau);
    out.push_back(compliance::delta_budget(tau, 4.0 * thr / tau));
  }
  return out;
}

}  // namespace

void PolicyConfig::validate() const {
  if (!(rho > 0.0) || !(rho < 1.0)) throw ConfigError("PolicyConfig: rho must lie in (0, 1)");
  if (!(delta > 0.0) || !(delta < 1.0)) throw ConfigError("PolicyConfig: delta must lie in (0, 1)");
  if (!(tau > 0.0) || tau > 1.0) throw ConfigError("PolicyConfig: tau must lie in (0, 1]");
  if (h < 1) throw ConfigError("PolicyConfig: h must be >= 1");
  if (mode == PolicyMode::Binary) {
    if (arm_count != 1) throw ConfigError("PolicyConfig: binary mode requires arm_count == 1");
    if (ell0 < 1 || ell1 < 1) throw ConfigError("PolicyConfig: ell0, ell1 must be >= 1");
    if (ell > 0) (void)explore_count_or_throw(rho, ell);
  } else {
    if (arm_count < 2) throw ConfigError("PolicyConfig: k-arm mode requires arm_count >= 2");
    if (ell < 1) throw ConfigError("PolicyConfig: k-arm mode requires ell >= 1");
    const double phase_len = static_cast<double>(ell) / rho;
    if (std::abs(phase_len - std::round(phase_len)) > 1e-9 * std::max(1.0, phase_len)) {
      throw ConfigError("PolicyConfig: ell / rho must be an integer");
    }
  }
}

PolicyConstants compute_policy_constants(const PolicyConfig& cfg,
                                         const agents::PopulationSpec& pop,
                                         const StreamFamily& streams) {
  cfg.validate();
  pop.validate();

  PolicyConstants c;
  c.sigma_g = resolve_sigma_g(cfg, pop);
  c.g_gap_bound = cfg.g_gap_bound.value_or(default_g_gap_bound(pop));
  c.xi_config = compliance::XiConfig{cfg.ell0, cfg.ell1, cfg.delta,
                                     c.g_gap_bound, c.sigma_g};

  const compliance::TypeMixture mixture = pop.mixture();
  const bool mirrored = cfg.incentivize == Incentivize::AlwaysTakers;

  std::size_t compliant_type = cfg.compliant_type;
  bool found = false;
  for (std::size_t i = 0; i < pop.types.size(); ++i) {
    const bool matches =
        mirrored ? pop.types[i].prior.preference == compliance::Preference::AlwaysTaker
                 : pop.types[i].prior.preference == compliance::Preference::NeverTaker;
    if (matches) {
      if (!found) compliant_type = i;
      found = true;
      if (i == cfg.compliant_type) compliant_type = i;
    }
  }
  if (!found) {
    throw ConfigError(
        "compute_policy_constants: no type with the incentivized preference");
  }

  // Per-type xi events (Extension 1): every incentivizable type gets its own
  // Monte Carlo estimate under its own prior.
  c.rho_ceilings.assign(pop.types.size(), std::numeric_limits<double>::quiet_NaN());
  c.sampling_certificates.assign(pop.types.size(), false);
  for (std::size_t i = 0; i < pop.types.size(); ++i) {
    const auto& prior = pop.types[i].prior;
    const bool incentivizable =
        mirrored ? prior.preference == compliance::Preference::AlwaysTaker
                 : prior.preference == compliance::Preference::NeverTaker;
    if (!incentivizable) continue;
    RngStream xi_rng = streams.make(domain::kXiMonteCarlo, i);
    const compliance::XiEstimate est =
        mirrored ? compliance::estimate_xi_probability_mirrored(
                       mixture, c.xi_config, i, cfg.xi_iterations, xi_rng)
                 : compliance::estimate_xi_probability(
                       mixture, c.xi_config, i, cfg.xi_iterations, xi_rng);
    if (i == compliant_type) c.xi_estimate = est;
    if (est.probability > 0.0) {
      c.rho_ceilings[i] =
          mirrored ? compliance::exploration_probability_bound_mirrored(
                         prior.prior_mean_theta, est.probability)
                   : compliance::exploration_probability_bound(
                         prior.prior_mean_theta, est.probability);
      c.sampling_certificates[i] = cfg.rho <= c.rho_ceilings[i];
    } else {
      c.rho_ceilings[i] = 0.0;
    }
  }

  if (!(cfg.delta < c.xi_estimate.probability / 8.0)) {
    throw ConfigError(
        "PolicyConfig: delta must be below P[xi]/8 before the sampling stage "
        "is armed (estimated P[xi] = " +
        std::to_string(c.xi_estimate.probability) + ")");
  }

  c.racing_thresholds = racing_thresholds_for(pop, cfg.tau);
  c.racing_delta_budgets = delta_budgets_for(pop, cfg.tau);

  c.sampling_compliant_mass = 0.0;
  for (std::size_t i = 0; i < pop.types.size(); ++i) {
    if (c.sampling_certificates[i]) c.sampling_compliant_mass += pop.types[i].fraction;
  }

  c.minimum_ells.assign(pop.types.size(), kInf);
  if (c.sampling_compliant_mass > 0.0) {
    for (std::size_t i = 0; i < pop.types.size(); ++i) {
      const double tau_p = 4.0 * c.racing_thresholds[i];
      if (tau_p > 0.0) {
        c.minimum_ells[i] = static_cast<double>(compliance::minimum_sampling_length(
            tau_p, cfg.rho, c.sampling_compliant_mass, c.sigma_g, cfg.delta));
      }
    }
  }
  return c;
}

agents::PolicySimulator make_sampling_stage_simulator(
    const PolicyConfig& cfg, const agents::PopulationSpec& pop,
    const PolicyConstants& constants) {
  pop.validate();
  const compliance::TypeMixture mixture = pop.mixture();
  std::vector<std::size_t> never_types, always_types;
  double never_mass = 0.0, always_mass = 0.0;
  for (std::size_t i = 0; i < mixture.priors.size(); ++i) {
    if (mixture.priors[i].preference == compliance::Preference::NeverTaker) {
      never_types.push_back(i);
      never_mass += mixture.fractions[i];
    } else {
      always_types.push_back(i);
      always_mass += mixture.fractions[i];
    }
  }
  const compliance::XiConfig xi = constants.xi_config;
  const double rho = cfg.rho;
  return [mixture, never_types, always_types, never_mass, always_mass, xi,
          rho](const std::vector<double>& theta, RngStream& rng) -> int {
    std::vector<double> mu_g(mixture.priors.size(), 0.0);
    for (std::size_t i = 0; i < mixture.priors.size(); ++i) {
      const auto& b = mixture.priors[i].baseline;
      mu_g[i] = stats::sample_normal(b.hyper_mean, b.hyper_std, rng);
    }
    auto pick = [&](const std::vector<std::size_t>& pool, double mass) {
      double u = rng.uniform01() * mass;
      for (std::size_t idx : pool) {
        u -= mixture.fractions[idx];
        if (u <= 0.0) return idx;
      }
      return pool.back();
    };
    double sum0 = 0.0;
    for (std::uint64_t j = 0; j < xi.ell0; ++j) {
      const std::size_t t = pick(never_types, never_mass);
      sum0 += stats::sample_normal(mu_g[t], mixture.priors[t].baseline.noise_std, rng);
    }
    double sum1 = 0.0;
    for (std::uint64_t j = 0; j < xi.ell1; ++j) {
      const std::size_t t = pick(always_types, always_mass);
      sum1 += theta[0] +
              stats::sample_normal(mu_g[t], mixture.priors[t].baseline.noise_std, rng);
    }
    const double y0 = sum0 / static_cast<double>(xi.ell0);
    const double y1 = sum1 / static_cast<double>(xi.ell1);
    const int a_star = compliance::xi_event_holds(y1, y0, xi) ? 1 : 0;
    return rng.uniform01() < rho ? 1 : a_star;
  };
}

namespace {

SamplingResult sampling_impl(const PolicyConfig& cfg,
                             const RealizedPopulation& realized,
                             const PolicyConstants& constants, double theta,
                             const StreamFamily& streams,
                             const BehaviorModel& behavior_in) {
  const agents::PopulationSpec& pop = realized.spec;
  const bool mirrored = cfg.incentivize == Incentivize::AlwaysTakers;
  const double p0 = pop.p0();
  const double p1 = pop.p1();
  if (!mirrored) {
    if (p0 <= 0.0) {
      throw ConfigError("run_sampling_stage: event xi needs control samples, "
                        "but the population has no never-taker mass");
    }
    if (p1 <= 0.0) {
      throw ConfigError("run_sampling_stage: the population must contain "
                        "always-taker mass (p1 > 0)");
    }
  } else if (p1 <= 0.0) {
    throw ConfigError("run_sampling_stage: mirrored mode needs always-takers");
  }

  BehaviorModel behavior = behavior_in;
  if (behavior.mode == agents::BehaviorMode::BayesMc && !behavior.simulator) {
    behavior.simulator = make_sampling_stage_simulator(cfg, pop, constants);
  }

  SamplingResult result;
  result.constants = constants;
  result.realized_mu_g = realized.mu_g;
  TrajectoryLog& log = result.log;
  const std::vector<double> theta_vec{theta};

  RngStream agent_rng = streams.make(domain::kAgents, 0);
  RoundContext ctx{&cfg, &realized, &behavior, &constants.sampling_certificates,
                   &agent_rng, &streams, 1};

  // First stage: no recommendations; agents reveal their preferred arm.
  std::uint64_t stage1_len;
  if (!mirrored) {
    stage1_len = static_cast<std::uint64_t>(std::ceil(
        2.0 * std::max(static_cast<double>(cfg.ell0) / p0,
                       static_cast<double>(cfg.ell1) / p1)));
  } else {
    stage1_len = static_cast<std::uint64_t>(
        std::ceil(2.0 * static_cast<double>(cfg.ell1) / p1));
  }

  std::uint64_t count0 = 0, count1 = 0;
  double sum0 = 0.0, sum1 = 0.0;
  for (std::uint64_t t = 0; t < stage1_len; ++t) {
    const RoundRecord& rec = play_round(log, ctx, t, Stage::SamplingFirst, 0,
                                        std::nullopt, false, theta_vec);
    if (rec.x == 0) { ++count0; sum0 += rec.y; }
    else { ++count1; sum1 += rec.y; }
  }
  log.stage1_rounds = stage1_len;
  if (!mirrored && (count0 < cfg.ell0 || count1 < cfg.ell1)) {
    throw InsufficientFirstStageError(
        "run_sampling_stage: first stage yielded " + std::to_string(count0) +
        " control and " + std::to_string(count1) +
        " treatment samples; needed " + std::to_string(cfg.ell0) + " / " +
        std::to_string(cfg.ell1));
  }
  if (mirrored && count1 < cfg.ell1) {
    throw InsufficientFirstStageError(
        "run_sampling_stage: mirrored first stage yielded " +
        std::to_string(count1) + " treatment samples; needed " +
        std::to_string(cfg.ell1));
  }

  const double y_bar_0 = count0 > 0 ? sum0 / static_cast<double>(count0) : 0.0;
  const double y_bar_1 = count1 > 0 ? sum1 / static_cast<double>(count1) : 0.0;
  int a_star;
  int explore_arm;
  if (!mirrored) {
    a_star = compliance::xi_event_holds(y_bar_1, y_bar_0, constants.xi_config) ? 1 : 0;
    explore_arm = 1;
  } else {
    a_star = compliance::xi_event_holds_mirrored(y_bar_1, constants.xi_config) ? 0 : 1;
    explore_arm = 0;
  }
  log.sampling_a_star = a_star;

  // Second stage: instrumented recommendations with an exact explore count.
  result.samples.arm_count = 1;
  RunningBinary sums;
  RngStream explore_rng = streams.make(domain::kExplore, 0);
  std::uint64_t t = stage1_len;

  auto play_stage2_round = [&](bool explore) {
    const int z = explore ? explore_arm : a_star;
    const RoundRecord& rec =
        play_round(log, ctx, t, Stage::SamplingSecond, 0, z, explore, theta_vec);
    result.samples.records.push_back({rec.z, rec.x, rec.y});
    sums.add(rec.z, rec.x, rec.y);
    ++t;
  };

  if (cfg.ell > 0) {
    const std::uint64_t explore_count = explore_count_or_throw(cfg.rho, cfg.ell);
    const std::vector<bool> explore_flags =
        pick_explore_rounds(cfg.ell, explore_count, explore_rng);
    for (std::uint64_t i = 0; i < cfg.ell; ++i) play_stage2_round(explore_flags[i]);
  } else {
    // Adaptive mode: extend in blocks of ceil(1/rho) rounds with one explore
    // each, until A(S, delta) crosses the best certifiable racing threshold.
    if (cfg.horizon == 0) {
      throw ConfigError("run_sampling_stage: adaptive ell requires a horizon");
    }
    double target = 0.0;
    for (std::size_t i = 0; i < pop.types.size(); ++i) {
      if (cfg.delta <= constants.racing_delta_budgets[i]) {
        target = std::max(target, constants.racing_thresholds[i]);
      }
    }
    if (target <= 0.0) {
      throw ConfigError(
          "run_sampling_stage: adaptive ell needs a type with a positive "
          "racing threshold and delta within its budget");
    }
    const std::uint64_t block =
        std::max<std::uint64_t>(2, static_cast<std::uint64_t>(std::ceil(1.0 / cfg.rho)));
    const std::uint64_t budget = cfg.horizon > stage1_len
                                     ? (cfg.horizon - stage1_len) / 2
                                     : 0;
    while (log.rounds.size() - stage1_len + block <= std::max(budget, block)) {
      const std::uint64_t slot = explore_rng.uniform_below(block);
      for (std::uint64_t i = 0; i < block; ++i) play_stage2_round(i == slot);
      if (sums.bound(cfg.delta, constants.sigma_g) <= target) break;
    }
  }
  log.stage2_rounds = log.rounds.size() - stage1_len;
  log.stop_round = log.rounds.size();
  return result;
}

struct BinarySnapshot {
  RunningBinary sums;
};

using SimulatorFactory =
    std::function<agents::PolicySimulator(std::uint64_t)>;

RacingResult racing_impl(const SampleSet& s0, const PolicyConfig& cfg,
                         const RealizedPopulation& realized, double theta,
                         const StreamFamily& streams,
                         const RacingOptions& options,
                         const BehaviorModel& behavior_in,
                         std::uint64_t round_offset,
                         const PolicyConstants* constants_opt,
                         const SimulatorFactory& simulator_factory = {}) {
  const agents::PopulationSpec& pop = realized.spec;
  s0.validate();
  if (s0.arm_count != 1) throw ConfigError("run_racing_stage: binary sample set required");
  if (s0.records.empty()) throw ConfigError("run_racing_stage: s0 must be non-empty");

  const double sigma_g = constants_opt ? constants_opt->sigma_g
                                       : resolve_sigma_g(cfg, pop);
  const std::vector<double> thresholds =
      constants_opt ? constants_opt->racing_thresholds
                    : racing_thresholds_for(pop, cfg.tau);
  const std::vector<double> budgets = constants_opt
                                          ? constants_opt->racing_delta_budgets
                                          : delta_budgets_for(pop, cfg.tau);

  BehaviorModel behavior = behavior_in;
  if (behavior.mode == agents::BehaviorMode::BayesMc && !behavior.simulator &&
      !simulator_factory) {
    throw ConfigError(
        "run_racing_stage: BAYES_MC agents need a policy simulator; use "
        "run_combined_policy or supply BehaviorModel::simulator");
  }

  RacingResult result;
  TrajectoryLog& log = result.log;
  const std::vector<double> theta_vec{theta};

  // Compliance certificates at entry.
  std::vector<bool> certs(pop.types.size(), false);
  for (std::size_t i = 0; i < pop.types.size(); ++i) {
    const bool forced =
        std::find(options.force_compliant_types.begin(),
                  options.force_compliant_types.end(),
                  i) != options.force_compliant_types.end();
    certs[i] = forced;
  }

  RunningBinary sums;
  for (const auto& r : s0.records) sums.add(r.z, r.x, r.y);
  const double a0 = sums.bound(cfg.delta, sigma_g);
  for (std::size_t i = 0; i < pop.types.size(); ++i) {
    if (!certs[i] && thresholds[i] > 0.0 && cfg.delta <= budgets[i] &&
        a0 <= thresholds[i]) {
      certs[i] = true;
    }
  }
  result.initial_certificates = certs;

  double p_c = 0.0;
  for (std::size_t i = 0; i < pop.types.size(); ++i) {
    if (certs[i]) p_c += pop.types[i].fraction;
  }

  result.full_compliance_phases.assign(pop.types.size(), kInf);
  if (p_c > 0.0) {
    for (std::size_t i = 0; i < pop.types.size(); ++i) {
      if (certs[i]) continue;
      const double tau_p = 4.0 * thresholds[i];
      if (tau_p > 0.0) {
        result.full_compliance_phases[i] =
            static_cast<double>(compliance::full_compliance_phase(
                tau_p, p_c, cfg.h, sigma_g, cfg.delta));
      }
    }
  }

  RngStream agent_rng = streams.make(domain::kAgents, 1);
  RoundContext ctx{&cfg,      &realized, &behavior, &certs,
                   &agent_rng, &streams,  1,         simulator_factory};

  std::vector<BinarySnapshot> snapshots{BinarySnapshot{sums}};
  std::uint64_t best = 0;
  double best_bound = a0;
  double theta_hat = std::isfinite(a0) ? sums.wald() : 0.0;
  double a_bound = a0;

  const std::uint64_t budget =
      options.round_budget > 0 ? options.round_budget : cfg.horizon;
  if (budget == 0) throw ConfigError("run_racing_stage: horizon must be > 0");

  std::uint64_t used = 0;
  std::uint64_t q = 1;
  std::optional<int> winner;

  while (true) {
    if (std::abs(theta_hat) > a_bound) {
      winner = theta_hat > 0.0 ? 1 : 0;
      break;
    }
    if (used + 2 * cfg.h > budget) break;  // undecided; racing tail below
    for (std::uint64_t j = 0; j < 2 * cfg.h; ++j) {
      const int z = static_cast<int>(j % 2);  // control first, then treatment
      const RoundRecord& rec = play_round(log, ctx, round_offset + used,
                                          Stage::RacingPhase, q, z, false,
                                          theta_vec);
      sums.add(rec.z, rec.x, rec.y);
      ++used;
    }
    snapshots.push_back(BinarySnapshot{sums});
    const double a_q = sums.bound(cfg.delta, sigma_g);
    if (a_q < best_bound) {
      best_bound = a_q;
      best = q;
    }
    const RunningBinary& best_sums = snapshots[best].sums;
    a_bound = best_sums.bound(cfg.delta, sigma_g);
    theta_hat = std::isfinite(a_bound) ? best_sums.wald() : 0.0;
    log.phases.push_back({q, a_bound, best, {theta_hat}});

    for (std::size_t i = 0; i < pop.types.size(); ++i) {
      if (certs[i]) continue;
      if (thresholds[i] > 0.0 && cfg.delta <= budgets[i] &&
          a_bound <= thresholds[i]) {
        certs[i] = true;
        log.flips.push_back({i, round_offset + used, q, FlipEvent::Route::Empirical});
      } else if (q >= result.full_compliance_phases[i]) {
        certs[i] = true;
        log.flips.push_back({i, round_offset + used, q, FlipEvent::Route::Theoretical});
      }
    }
    ++q;
  }

  log.stop_round = round_offset + used;
  if (winner.has_value()) {
    while (used < budget) {
      play_round(log, ctx, round_offset + used, Stage::Exploit, q, *winner,
                 false, theta_vec);
      ++used;
    }
  } else {
    // Horizon reached mid-race: keep alternating, no forced winner.
    std::uint64_t j = 0;
    while (used < budget) {
      play_round(log, ctx, round_offset + used, Stage::RacingPhase, q,
                 static_cast<int>(j % 2), false, theta_vec);
      ++used;
      ++j;
    }
    log.stop_round = round_offset + used;
  }

  result.winner = winner;
  log.winner = winner;
  const RunningBinary& final_sums = snapshots[best].sums;
  result.final_estimate.delta = cfg.delta;
  result.final_estimate.denominator = final_sums.denominator();
  result.final_estimate.bound = final_sums.bound(cfg.delta, sigma_g);
  result.final_estimate.theta = {
      std::isfinite(result.final_estimate.bound) ? final_sums.wald() : 0.0};
  return result;
}

void append_log(TrajectoryLog& dst, const TrajectoryLog& src) {
  dst.rounds.insert(dst.rounds.end(), src.rounds.begin(), src.rounds.end());
  dst.phases.insert(dst.phases.end(), src.phases.begin(), src.phases.end());
  dst.flips.insert(dst.flips.end(), src.flips.begin(), src.flips.end());
}

}  // namespace

agents::PolicySimulator make_combined_policy_simulator(
    const PolicyConfig& cfg, const agents::PopulationSpec& pop,
    const PolicyConstants& constants, std::uint64_t round) {
  pop.validate();
  return [cfg, pop, constants, round](const std::vector<double>& theta,
                                      RngStream& rng) -> int {
    const StreamFamily inner{stats::RngSeed{rng.next_u64()}};
    RngStream realize_rng = inner.make(domain::kRealize, 0);
    const RealizedPopulation realized = agents::realize(pop, realize_rng);
    SamplingResult sampling;
    try {
      sampling = sampling_impl(cfg, realized, constants, theta[0], inner, {});
    } catch (const InsufficientFirstStageError&) {
      return -1;  // this replay never issues the observed recommendation
    }
    const std::uint64_t consumed = sampling.log.rounds.size();
    if (round < consumed) return sampling.log.rounds[round].z;
    RacingOptions options;
    options.round_budget = round - consumed + 1;
    const RacingResult racing =
        racing_impl(sampling.samples, cfg, realized, theta[0], inner, options,
                    {}, consumed, &constants);
    const std::uint64_t idx = round - consumed;
    if (idx >= racing.log.rounds.size()) return -1;
    return racing.log.rounds[idx].z;
  };
}

SamplingResult run_sampling_stage(const PolicyConfig& cfg,
                                  const agents::PopulationSpec& pop,
                                  double theta, const StreamFamily& streams,
                                  const BehaviorModel& behavior) {
  const PolicyConstants constants = compute_policy_constants(cfg, pop, streams);
  RngStream realize_rng = streams.make(domain::kRealize, 0);
  const RealizedPopulation realized = agents::realize(pop, realize_rng);
  return sampling_impl(cfg, realized, constants, theta, streams, behavior);
}

RacingResult run_racing_stage(const SampleSet& s0, const PolicyConfig& cfg,
                              const agents::PopulationSpec& pop, double theta,
                              const StreamFamily& streams,
                              const RacingOptions& options,
                              const BehaviorModel& behavior) {
  cfg.validate();
  pop.validate();
  RngStream realize_rng = streams.make(domain::kRealize, 0);
  const RealizedPopulation realized = agents::realize(pop, realize_rng);
  return racing_impl(s0, cfg, realized, theta, streams, options, behavior, 0,
                     nullptr);
}

CombinedResult run_combined_policy(const PolicyConfig& cfg,
                                   const agents::PopulationSpec& pop,
                                   double theta, const StreamFamily& streams,
                                   const BehaviorModel& behavior) {
  const PolicyConstants constants = compute_policy_constants(cfg, pop, streams);
  if (cfg.horizon == 0) throw ConfigError("run_combined_policy: horizon required");
  RngStream realize_rng = streams.make(domain::kRealize, 0);
  const RealizedPopulation realized = agents::realize(pop, realize_rng);

  SamplingResult sampling =
      sampling_impl(cfg, realized, constants, theta, streams, behavior);
  const std::uint64_t consumed = sampling.log.rounds.size();
  if (consumed + 2 * cfg.h > cfg.horizon) {
    throw ConfigError(
        "run_combined_policy: horizon too small; the sampling stage consumed " +
        std::to_string(consumed) + " of " + std::to_string(cfg.horizon) +
        " rounds");
  }

  RacingOptions racing_options;
  racing_options.round_budget = cfg.horizon - consumed;
  SimulatorFactory factory;
  if (behavior.mode == agents::BehaviorMode::BayesMc && !behavior.simulator) {
    factory = [cfg, pop, constants](std::uint64_t round) {
      return make_combined_policy_simulator(cfg, pop, constants, round);
    };
  }
  RacingResult racing =
      racing_impl(sampling.samples, cfg, realized, theta, streams,
                  racing_options, behavior, consumed, &constants, factory);

  CombinedResult out;
  out.log = std::move(sampling.log);
  append_log(out.log, racing.log);
  out.log.winner = racing.winner;
  out.log.stop_round = racing.log.stop_round;
  out.winner = racing.winner;
  out.final_estimate = racing.final_estimate;
  out.sampling_rounds = consumed;
  out.constants = constants;
  out.regret = pseudo_regret(out.log, {theta});
  return out;
}

RegretReport pseudo_regret(const TrajectoryLog& log,
                           const std::vector<double>& theta) {
  if (theta.empty()) throw ConfigError("pseudo_regret: theta required");
  double opt = theta.size() == 1 ? std::max(theta[0], 0.0)
                                 : *std::max_element(theta.begin(), theta.end());
  RegretReport report;
  report.cumulative.reserve(log.rounds.size());
  double running = 0.0;
  for (const auto& rec : log.rounds) {
    const double gained = rec.x == 0 ? 0.0 : theta[static_cast<std::size_t>(rec.x - 1)];
    const double addend = opt - gained;
    running += addend;
    report.cumulative.push_back(running);
    report.per_type[rec.type_index] += addend;
  }
  report.pseudo_regret = running;
  return report;
}

// ---------------------------------------------------------------------------
// k-treatment extensions
// ---------------------------------------------------------------------------

namespace {

void validate_k_population(const agents::PopulationSpec& pop, int k) {
  for (const auto& t : pop.types) {
    if (static_cast<int>(t.prior.arm_priors.size()) != k) {
      throw ConfigError("k-arm mode: every type needs one prior per arm");
    }
    const std::vector<double> means = t.prior.arm_prior_means();
    for (std::size_t j = 1; j < means.size(); ++j) {
      if (!(means[j] < means[j - 1])) {
        throw ConfigError(
            "k-arm mode: arm prior means must be strictly decreasing (shared "
            "preference ordering)");
      }
    }
  }
}

// P[xi^(u)] = min_i P[xi^(u)_i], estimated by replaying the stage structure:
// theta drawn from the type's arm priors, per-arm means accumulated phase by
// phase, the event checked for each arm it gates.
compliance::XiEstimate estimate_xi_probability_k(
    const agents::PopulationSpec& pop, std::size_t type_index,
    const PolicyConfig& cfg, double sigma_g, RngStream& rng) {
  const int k = cfg.arm_count;
  const auto& prior = pop.types[type_index].prior;
  const std::vector<double> mu = prior.arm_prior_means();
  const double c_margin =
      sigma_g * std::sqrt(2.0 * std::log(3.0 / cfg.delta) /
                          static_cast<double>(cfg.ell)) +
      0.25;

  std::vector<std::uint64_t> hits(static_cast<std::size_t>(k), 0);
  std::vector<double> mu_g(pop.types.size(), 0.0);
  std::vector<double> y_mean(static_cast<std::size_t>(k), 0.0);
  for (std::uint64_t it = 0; it < cfg.xi_iterations; ++it) {
    std::vector<double> theta(static_cast<std::size_t>(k), 0.0);
    for (int a = 0; a < k; ++a) {
      theta[static_cast<std::size_t>(a)] = stats::sample_truncated_gaussian(
          prior.arm_priors[static_cast<std::size_t>(a)], rng);
    }
    for (std::size_t i = 0; i < pop.types.size(); ++i) {
      const auto& b = pop.types[i].prior.baseline;
      mu_g[i] = stats::sample_normal(b.hyper_mean, b.hyper_std, rng);
    }
    auto arm_mean = [&](int arm) {
      double sum = 0.0;
      for (std::uint64_t j = 0; j < cfg.ell; ++j) {
        double u = rng.uniform01();
        std::size_t ti = pop.types.size() - 1;
        for (std::size_t i = 0; i < pop.types.size(); ++i) {
          u -= pop.types[i].fraction;
          if (u <= 0.0) { ti = i; break; }
        }
        sum += theta[static_cast<std::size_t>(arm - 1)] +
               stats::sample_normal(mu_g[ti], pop.types[ti].prior.baseline.noise_std, rng);
      }
      return sum / static_cast<double>(cfg.ell);
    };
    y_mean[0] = arm_mean(1);
    for (int i = 2; i <= k; ++i) {
      bool arm1_worst = true;
      double max_observed = y_mean[0];
      for (int j = 2; j < i; ++j) {
        const double yj = y_mean[static_cast<std::size_t>(j - 1)];
        if (!(y_mean[0] + c_margin <= yj - c_margin)) arm1_worst = false;
        max_observed = std::max(max_observed, yj);
      }
      const bool looks_best =
          max_observed + c_margin <= mu[static_cast<std::size_t>(i - 1)];
      if (arm1_worst && looks_best) ++hits[static_cast<std::size_t>(i - 1)];
      y_mean[static_cast<std::size_t>(i - 1)] = arm_mean(i);
    }
  }

  compliance::XiEstimate est;
  est.iterations = cfg.xi_iterations;
  double min_p = 1.0;
  for (int i = 2; i <= k; ++i) {
    min_p = std::min(min_p, static_cast<double>(hits[static_cast<std::size_t>(i - 1)]) /
                                static_cast<double>(cfg.xi_iterations));
  }
  est.probability = min_p;
  est.std_error = std::sqrt(min_p * (1.0 - min_p) /
                            static_cast<double>(cfg.xi_iterations));
  return est;
}

// tau P[min pairwise |gap| > tau] / 4 for each type, by Monte Carlo over the
// type's arm priors.
double racing_threshold_k(const compliance::PriorSpec& prior, double tau,
                          std::uint64_t iters, RngStream& rng) {
  std::uint64_t hits = 0;
  const std::size_t k = prior.arm_priors.size();
  std::vector<double> theta(k, 0.0);
  for (std::uint64_t it = 0; it < iters; ++it) {
    for (std::size_t a = 0; a < k; ++a) {
      theta[a] = stats::sample_truncated_gaussian(prior.arm_priors[a], rng);
    }
    double min_gap = kInf;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        min_gap = std::min(min_gap, std::abs(theta[a] - theta[b]));
      }
    }
    if (min_gap > tau) ++hits;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(iters);
  return tau * p / 4.0;
}

}  // namespace

SamplingResult run_sampling_stage_k(const PolicyConfig& cfg,
                                    const agents::PopulationSpec& pop,
                                    const std::vector<double>& theta,
                                    const StreamFamily& streams,
                                    const BehaviorModel& behavior_in) {
  cfg.validate();
  pop.validate();
  if (cfg.mode != PolicyMode::KArm) throw ConfigError("run_sampling_stage_k: k-arm mode required");
  const int k = cfg.arm_count;
  if (static_cast<int>(theta.size()) != k) {
    throw ConfigError("run_sampling_stage_k: theta must have arm_count entries");
  }
  validate_k_population(pop, k);

  const double sigma_g = resolve_sigma_g(cfg, pop);

  PolicyConstants constants;
  constants.sigma_g = sigma_g;
  constants.rho_ceilings.assign(pop.types.size(), std::numeric_limits<double>::quiet_NaN());
  constants.sampling_certificates.assign(pop.types.size(), false);
  for (std::size_t i = 0; i < pop.types.size(); ++i) {
    RngStream xi_rng = streams.make(domain::kXiMonteCarlo, i);
    const compliance::XiEstimate est =
        estimate_xi_probability_k(pop, i, cfg, sigma_g, xi_rng);
    if (i == cfg.compliant_type) constants.xi_estimate = est;
    if (est.probability > 0.0) {
      constants.rho_ceilings[i] = compliance::exploration_probability_bound_k(
          pop.types[i].prior.arm_prior_means(), est.probability);
      constants.sampling_certificates[i] = cfg.rho <= constants.rho_ceilings[i];
    }
  }
  constants.sampling_compliant_mass = 0.0;
  for (std::size_t i = 0; i < pop.types.size(); ++i) {
    if (constants.sampling_certificates[i]) {
      constants.sampling_compliant_mass += pop.types[i].fraction;
    }
  }

  BehaviorModel behavior = behavior_in;
  if (behavior.mode == agents::BehaviorMode::BayesMc && !behavior.simulator) {
    throw ConfigError("run_sampling_stage_k: BAYES_MC needs a policy simulator");
  }

  SamplingResult result;
  result.constants = constants;
  TrajectoryLog& log = result.log;
  result.samples.arm_count = k;

  RngStream realize_rng = streams.make(domain::kRealize, 0);
  const RealizedPopulation realized = agents::realize(pop, realize_rng);
  result.realized_mu_g = realized.mu_g;
  RngStream agent_rng = streams.make(domain::kAgents, 0);
  RoundContext ctx{&cfg, &realized, &behavior, &constants.sampling_certificates,
                   &agent_rng, &streams, k};

  // First stage: everyone takes the commonly preferred treatment 1.
  std::uint64_t t = 0;
  double sum1 = 0.0;
  for (; t < cfg.ell; ++t) {
    const RoundRecord& rec =
        play_round(log, ctx, t, Stage::SamplingFirst, 0, std::nullopt, false, theta);
    sum1 += rec.y;
  }
  log.stage1_rounds = cfg.ell;

  std::vector<double> arm_sum(static_cast<std::size_t>(k), 0.0);
  std::vector<std::uint64_t> arm_count(static_cast<std::size_t>(k), 0);
  arm_sum[0] = sum1;
  arm_count[0] = cfg.ell;

  const auto& compliant_prior = pop.types[cfg.compliant_type].prior;
  const std::vector<double> mu = compliant_prior.arm_prior_means();
  const double c_margin =
      sigma_g * std::sqrt(2.0 * std::log(3.0 / cfg.delta) /
                          static_cast<double>(cfg.ell)) +
      0.25;
  const std::uint64_t phase_len =
      static_cast<std::uint64_t>(std::llround(static_cast<double>(cfg.ell) / cfg.rho));
  RngStream explore_rng = streams.make(domain::kExplore, 0);

  for (int arm = 2; arm <= k; ++arm) {
    // Event xi_i: arm 1 observed-worst with margin, and the unexplored arm's
    // prior mean dominates every observed arm with margin.
    bool arm1_worst = true;
    double max_observed = arm_sum[0] / static_cast<double>(arm_count[0]);
    const double y1 = max_observed;
    for (int j = 2; j < arm; ++j) {
      if (arm_count[static_cast<std::size_t>(j - 1)] == 0) continue;
      const double yj = arm_sum[static_cast<std::size_t>(j - 1)] /
                        static_cast<double>(arm_count[static_cast<std::size_t>(j - 1)]);
      if (!(y1 + c_margin <= yj - c_margin)) arm1_worst = false;
      max_observed = std::max(max_observed, yj);
    }
    const bool xi_holds =
        arm1_worst &&
        max_observed + c_margin <= mu[static_cast<std::size_t>(arm - 1)];
    const int a_star = xi_holds ? arm : 1;
    if (arm == 2) log.sampling_a_star = a_star;

    const std::vector<bool> explore_flags =
        pick_explore_rounds(phase_len, cfg.ell, explore_rng);
    for (std::uint64_t i = 0; i < phase_len; ++i, ++t) {
      const int z = explore_flags[i] ? arm : a_star;
      const RoundRecord& rec = play_round(log, ctx, t, Stage::SamplingSecond,
                                          static_cast<std::uint64_t>(arm), z,
                                          explore_flags[i], theta);
      result.samples.records.push_back({rec.z, rec.x, rec.y});
      arm_sum[static_cast<std::size_t>(rec.x - 1)] += rec.y;
      ++arm_count[static_cast<std::size_t>(rec.x - 1)];
    }
  }
  log.stage2_rounds = log.rounds.size() - log.stage1_rounds;
  log.stop_round = log.rounds.size();
  return result;
}

RacingResult run_racing_stage_k(const SampleSet& s0, const PolicyConfig& cfg,
                                const agents::PopulationSpec& pop,
                                const std::vector<double>& theta,
                                const stats::StreamFamily& streams,
                                const RacingOptions& options,
                                const BehaviorModel& behavior_in) {
  cfg.validate();
  pop.validate();
  if (cfg.mode != PolicyMode::KArm) throw ConfigError("run_racing_stage_k: k-arm mode required");
  const int k = cfg.arm_count;
  if (static_cast<int>(theta.size()) != k) {
    throw ConfigError("run_racing_stage_k: theta must have arm_count entries");
  }
  validate_k_population(pop, k);
  s0.validate();
  if (s0.arm_count != k) throw ConfigError("run_racing_stage_k: s0 arm_count mismatch");

  const double sigma_g = resolve_sigma_g(cfg, pop);
  BehaviorModel behavior = behavior_in;
  if (behavior.mode == agents::BehaviorMode::BayesMc && !behavior.simulator) {
    throw ConfigError("run_racing_stage_k: BAYES_MC needs a policy simulator");
  }

  RacingResult result;
  TrajectoryLog& log = result.log;

  RunningKArm sums(k);
  for (const auto& r : s0.records) sums.add(r.z, r.x, r.y);
  std::vector<double> theta_hat;
  if (!sums.estimate(theta_hat)) {
    throw RankDeficientError(
        "run_racing_stage_k: s0 interaction matrix is singular");
  }
  double a_bound = sums.bound(cfg.delta, sigma_g);

  std::vector<bool> certs(pop.types.size(), false);
  result.full_compliance_phases.assign(pop.types.size(), kInf);
  std::vector<double> thresholds(pop.types.size(), 0.0);
  for (std::size_t i = 0; i < pop.types.size(); ++i) {
    RngStream gap_rng = streams.make(domain::kGapMonteCarlo, i);
    thresholds[i] = racing_threshold_k(pop.types[i].prior, cfg.tau,
                                       cfg.xi_iterations, gap_rng);
    const double tail = 4.0 * thresholds[i] / cfg.tau;
    const bool forced =
        std::find(options.force_compliant_types.begin(),
                  options.force_compliant_types.end(),
                  i) != options.force_compliant_types.end();
    certs[i] = forced || (thresholds[i] > 0.0 &&
                          cfg.delta <= compliance::delta_budget(cfg.tau, tail) &&
                          a_bound <= thresholds[i]);
  }
  result.initial_certificates = certs;

  RngStream realize_rng = streams.make(domain::kRealize, 0);
  const RealizedPopulation realized = agents::realize(pop, realize_rng);
  RngStream agent_rng = streams.make(domain::kAgents, 1);
  RoundContext ctx{&cfg, &realized, &behavior, &certs, &agent_rng, &streams, k};

  const std::uint64_t budget =
      options.round_budget > 0 ? options.round_budget : cfg.horizon;
  if (budget == 0) throw ConfigError("run_racing_stage_k: horizon must be > 0");

  std::vector<int> active(static_cast<std::size_t>(k));
  std::iota(active.begin(), active.end(), 1);

  struct KSnapshot { RunningKArm sums; };
  std::vector<KSnapshot> snapshots{KSnapshot{sums}};
  std::uint64_t best = 0;
  double best_bound = a_bound;

  std::uint64_t used = 0;
  std::uint64_t q = 1;
  std::optional<int> winner;

  while (true) {
    // Eliminate arms trailing the in-set leader by more than A_{q-1}.
    double leader = -kInf;
    for (int arm : active) {
      leader = std::max(leader, theta_hat[static_cast<std::size_t>(arm - 1)]);
    }
    std::vector<int> next_active;
    for (int arm : active) {
      if (leader - theta_hat[static_cast<std::size_t>(arm - 1)] <= a_bound) {
        next_active.push_back(arm);
      }
    }
    active = std::move(next_active);
    if (active.size() == 1) {
      winner = active.front();
      break;
    }
    const std::uint64_t phase_rounds = cfg.h * active.size();
    if (used + phase_rounds > budget) break;

    for (std::uint64_t slot = 0; slot < cfg.h; ++slot) {
      for (int arm : active) {
        const RoundRecord& rec = play_round(log, ctx, used, Stage::RacingPhase,
                                            q, arm, false, theta);
        sums.add(rec.z, rec.x, rec.y);
        ++used;
      }
    }
    snapshots.push_back(KSnapshot{sums});
    const double a_q = sums.bound(cfg.delta, sigma_g);
    if (a_q < best_bound) {
      best_bound = a_q;
      best = q;
    }
    const RunningKArm& best_sums = snapshots[best].sums;
    a_bound = best_sums.bound(cfg.delta, sigma_g);
    if (!best_sums.estimate(theta_hat)) {
      throw RankDeficientError("run_racing_stage_k: estimate lost full rank");
    }
    log.phases.push_back({q, a_bound, best, theta_hat});

    for (std::size_t i = 0; i < pop.types.size(); ++i) {
      if (certs[i]) continue;
      const double tail = 4.0 * thresholds[i] / cfg.tau;
      if (thresholds[i] > 0.0 &&
          cfg.delta <= compliance::delta_budget(cfg.tau, tail) &&
          a_bound <= thresholds[i]) {
        certs[i] = true;
        log.flips.push_back({i, used, q, FlipEvent::Route::Empirical});
      }
    }
    ++q;
  }

  log.stop_round = used;
  if (winner.has_value()) {
    while (used < budget) {
      play_round(log, ctx, used, Stage::Exploit, q, *winner, false, theta);
      ++used;
    }
  } else {
    std::size_t cursor = 0;
    while (used < budget) {
      play_round(log, ctx, used, Stage::RacingPhase, q,
                 active[cursor % active.size()], false, theta);
      ++cursor;
      ++used;
    }
    log.stop_round = used;
  }

  result.winner = winner;
  log.winner = winner;
  const RunningKArm& final_sums = snapshots[best].sums;
  result.final_estimate.delta = cfg.delta;
  result.final_estimate.bound = final_sums.bound(cfg.delta, sigma_g);
  result.final_estimate.denominator = linalg::min_singular_value(final_sums.matrix());
  if (!final_sums.estimate(result.final_estimate.theta)) {
    result.final_estimate.theta.assign(static_cast<std::size_t>(k), 0.0);
  }
  return result;
}

CombinedResult run_combined_policy_k(const PolicyConfig& cfg,
                                     const agents::PopulationSpec& pop,
                                     const std::vector<double>& theta,
                                     const stats::StreamFamily& streams,
                                     const BehaviorModel& behavior) {
  if (cfg.horizon == 0) throw ConfigError("run_combined_policy_k: horizon required");
  SamplingResult sampling = run_sampling_stage_k(cfg, pop, theta, streams, behavior);
  const std::uint64_t consumed = sampling.log.rounds.size();
  if (consumed + cfg.h * static_cast<std::uint64_t>(cfg.arm_count) > cfg.horizon) {
    throw ConfigError("run_combined_policy_k: horizon too small");
  }
  RacingOptions options;
  options.round_budget = cfg.horizon - consumed;
  RacingResult racing =
      run_racing_stage_k(sampling.samples, cfg, pop, theta, streams, options,
                         behavior);
  // Renumber racing rounds to continue the global clock.
  for (auto& rec : racing.log.rounds) rec.t += consumed;
  for (auto& flip : racing.log.flips) flip.round += consumed;
  racing.log.stop_round += consumed;

  CombinedResult out;
  out.log = std::move(sampling.log);
  append_log(out.log, racing.log);
  out.log.winner = racing.winner;
  out.log.stop_round = racing.log.stop_round;
  out.winner = racing.winner;
  out.final_estimate = racing.final_estimate;
  out.sampling_rounds = consumed;
  out.constants = sampling.constants;
  out.regret = pseudo_regret(out.log, theta);
  return out;
}

}  // namespace ivlab::mechanism
