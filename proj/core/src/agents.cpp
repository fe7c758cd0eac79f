#include "ivlab/agents.hpp"

#include <cmath>

#include "ivlab/errors.hpp"

namespace ivlab::agents {

void PopulationSpec::validate() const {
  if (types.empty()) throw ConfigError("PopulationSpec: no types");
  double total = 0.0;
  for (const auto& t : types) {
    if (t.fraction < 0.0) throw ConfigError("PopulationSpec: negative fraction");
    t.prior.theta_prior.validate();
    t.prior.baseline.validate();
    total += t.fraction;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigError("PopulationSpec: type fractions must sum to 1");
  }
}

double PopulationSpec::p0() const {
  double mass = 0.0;
  for (const auto& t : types) {
    if (t.prior.preference == compliance::Preference::NeverTaker) mass += t.fraction;
  }
  return mass;
}

double PopulationSpec::p1() const { return 1.0 - p0(); }

compliance::TypeMixture PopulationSpec::mixture() const {
  compliance::TypeMixture m;
  for (const auto& t : types) {
    m.priors.push_back(t.prior);
    m.fractions.push_back(t.fraction);
  }
  return m;
}

RealizedPopulation realize(const PopulationSpec& pop, stats::RngStream& rng) {
  pop.validate();
  RealizedPopulation out;
  out.spec = pop;
  out.mu_g.reserve(pop.types.size());
  for (const auto& t : pop.types) {
    out.mu_g.push_back(stats::sample_normal(t.prior.baseline.hyper_mean,
                                            t.prior.baseline.hyper_std, rng));
  }
  return out;
}

AgentDraw draw_agent(const RealizedPopulation& pop, std::uint64_t t,
                     stats::RngStream& rng) {
  AgentDraw agent;
  agent.round = t;
  double u = rng.uniform01();
  std::size_t idx = pop.spec.types.size() - 1;
  for (std::size_t i = 0; i < pop.spec.types.size(); ++i) {
    u -= pop.spec.types[i].fraction;
    if (u <= 0.0) { idx = i; break; }
  }
  agent.type_index = idx;
  agent.baseline_g = stats::sample_normal(
      pop.mu_g[idx], pop.spec.types[idx].prior.baseline.noise_std, rng);
  return agent;
}

int preferred_arm(const compliance::PriorSpec& prior, int arm_count) {
  if (arm_count <= 1) return prior.prior_mean_theta > 0.0 ? 1 : 0;
  return 1;
}

namespace {

std::vector<double> draw_theta(const compliance::PriorSpec& prior,
                               int arm_count, stats::RngStream& rng) {
  if (arm_count <= 1) {
    return {stats::sample_truncated_gaussian(prior.theta_prior, rng)};
  }
  std::vector<double> theta;
  theta.reserve(prior.arm_priors.size());
  for (const auto& p : prior.arm_priors) {
    theta.push_back(stats::sample_truncated_gaussian(p, rng));
  }
  return theta;
}

std::vector<double> prior_means(const compliance::PriorSpec& prior,
                                int arm_count) {
  if (arm_count <= 1) return {prior.prior_mean_theta};
  return prior.arm_prior_means();
}

}  // namespace

PosteriorEstimate bayes_posterior_mean(const compliance::PriorSpec& prior,
                                       int arm_count, int observed_z,
                                       const PolicySimulator& simulator,
                                       std::uint64_t samples,
                                       stats::RngStream& rng) {
  if (!simulator) throw ConfigError("bayes_posterior_mean: simulator required");
  const std::size_t dim = arm_count <= 1 ? 1 : static_cast<std::size_t>(arm_count);
  PosteriorEstimate est;
  std::vector<double> sum(dim, 0.0);
  double sum_sq0 = 0.0;
  for (std::uint64_t i = 0; i < samples; ++i) {
    const std::vector<double> theta = draw_theta(prior, arm_count, rng);
    if (theta.size() != dim) {
      throw ConfigError("bayes_posterior_mean: arm prior count mismatch");
    }
    if (simulator(theta, rng) != observed_z) continue;
    for (std::size_t j = 0; j < dim; ++j) sum[j] += theta[j];
    sum_sq0 += theta[0] * theta[0];
    ++est.accepted;
  }
  if (est.accepted == 0) {
    est.mean = prior_means(prior, arm_count);  // no information: stay at prior
    return est;
  }
  const double n = static_cast<double>(est.accepted);
  est.mean.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) est.mean[j] = sum[j] / n;
  const double var = std::max(0.0, sum_sq0 / n - est.mean[0] * est.mean[0]);
  est.std_error = std::sqrt(var / n);
  return est;
}

int agent_action(const AgentDraw& agent, const RealizedPopulation& pop,
                 std::optional<int> recommendation,
                 const std::vector<bool>& certificates,
                 const BehaviorModel& model, int arm_count,
                 stats::RngStream& bayes_rng) {
  const auto& prior = pop.spec.types[agent.type_index].prior;
  const int fallback = preferred_arm(prior, arm_count);
  if (!recommendation.has_value()) return fallback;
  if (model.mode == BehaviorMode::TheoryDriven) {
    const bool certified = agent.type_index < certificates.size() &&
                           certificates[agent.type_index];
    return certified ? *recommendation : fallback;
  }
  const PosteriorEstimate post =
      bayes_posterior_mean(prior, arm_count, *recommendation, model.simulator,
                           model.posterior_samples, bayes_rng);
  if (arm_count <= 1) return post.mean[0] > 0.0 ? 1 : 0;
  std::size_t best = 0;
  for (std::size_t j = 1; j < post.mean.size(); ++j) {
    if (post.mean[j] > post.mean[best]) best = j;
  }
  return static_cast<int>(best) + 1;
}

double reward(const std::vector<double>& theta, int action, double baseline_g) {
  if (action == 0) return baseline_g;
  const std::size_t idx = static_cast<std::size_t>(action - 1);
  if (idx >= theta.size()) throw ConfigError("reward: action out of range");
  return theta[idx] + baseline_g;
}

}  // namespace ivlab::agents
