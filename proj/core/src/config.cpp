#include "ivlab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ivlab/errors.hpp"

namespace ivlab::harness {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& scope) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("config: unknown key '" + scope + "." + it.key() + "'");
    }
  }
}

double get_num(const json& obj, const std::string& key, const std::string& scope,
               double fallback, bool required = false) {
  if (!obj.contains(key)) {
    if (required) throw ConfigError("config: missing key '" + scope + "." + key + "'");
    return fallback;
  }
  if (!obj[key].is_number()) {
    throw ConfigError("config: key '" + scope + "." + key + "' must be a number");
  }
  return obj[key].get<double>();
}

stats::TruncatedGaussian parse_truncated(const json& obj, const std::string& scope) {
  if (!obj.is_object()) throw ConfigError("config: '" + scope + "' must be an object");
  check_keys(obj, {"mean", "std", "lower", "upper"}, scope);
  stats::TruncatedGaussian d;
  d.mean = get_num(obj, "mean", scope, 0.0, true);
  d.std_dev = get_num(obj, "std", scope, 1.0, true);
  d.lower = get_num(obj, "lower", scope, -1.0);
  d.upper = get_num(obj, "upper", scope, 1.0);
  d.validate();
  return d;
}

stats::GaussianBaseline parse_baseline(const json& obj, const std::string& scope) {
  if (!obj.is_object()) throw ConfigError("config: '" + scope + "' must be an object");
  check_keys(obj, {"hyper_mean", "hyper_std", "noise_std"}, scope);
  stats::GaussianBaseline b;
  b.hyper_mean = get_num(obj, "hyper_mean", scope, 0.0);
  b.hyper_std = get_num(obj, "hyper_std", scope, 0.0);
  b.noise_std = get_num(obj, "noise_std", scope, 1.0);
  b.validate();
  return b;
}

agents::PopulationSpec parse_population(const json& obj) {
  if (!obj.is_object()) throw ConfigError("config: 'population' must be an object");
  check_keys(obj, {"types"}, "population");
  if (!obj.contains("types") || !obj["types"].is_array() || obj["types"].empty()) {
    throw ConfigError("config: 'population.types' must be a non-empty array");
  }
  agents::PopulationSpec pop;
  std::size_t idx = 0;
  for (const auto& t : obj["types"]) {
    const std::string scope = "population.types[" + std::to_string(idx) + "]";
    check_keys(t, {"name", "fraction", "theta_prior", "baseline", "arm_priors"},
               scope);
    if (!t.contains("theta_prior")) {
      throw ConfigError("config: missing key '" + scope + ".theta_prior'");
    }
    agents::TypeSpec type;
    type.fraction = get_num(t, "fraction", scope, 0.0, true);
    type.prior = compliance::make_prior(
        parse_truncated(t["theta_prior"], scope + ".theta_prior"),
        t.contains("baseline")
            ? parse_baseline(t["baseline"], scope + ".baseline")
            : stats::GaussianBaseline{});
    if (t.contains("arm_priors")) {
      if (!t["arm_priors"].is_array()) {
        throw ConfigError("config: '" + scope + ".arm_priors' must be an array");
      }
      std::size_t a = 0;
      for (const auto& p : t["arm_priors"]) {
        type.prior.arm_priors.push_back(parse_truncated(
            p, scope + ".arm_priors[" + std::to_string(a) + "]"));
        ++a;
      }
    }
    pop.types.push_back(std::move(type));
    ++idx;
  }
  pop.validate();
  return pop;
}

mechanism::PolicyConfig parse_policy(const json& obj) {
  if (!obj.is_object()) throw ConfigError("config: 'policy' must be an object");
  check_keys(obj,
             {"rho", "ell", "ell0", "ell1", "delta", "g_gap_bound", "h", "tau",
              "horizon", "arm_count", "mode", "incentivize", "sigma_g",
              "xi_iterations", "compliant_type"},
             "policy");
  mechanism::PolicyConfig p;
  p.rho = get_num(obj, "rho", "policy", p.rho);
  p.ell = static_cast<std::uint64_t>(get_num(obj, "ell", "policy", 0.0));
  p.ell0 = static_cast<std::uint64_t>(get_num(obj, "ell0", "policy", 100.0));
  p.ell1 = static_cast<std::uint64_t>(get_num(obj, "ell1", "policy", 100.0));
  p.delta = get_num(obj, "delta", "policy", p.delta);
  if (obj.contains("g_gap_bound") && !obj["g_gap_bound"].is_null()) {
    p.g_gap_bound = get_num(obj, "g_gap_bound", "policy", 0.0);
  }
  p.h = static_cast<std::uint64_t>(get_num(obj, "h", "policy", 50.0));
  p.tau = get_num(obj, "tau", "policy", p.tau);
  p.horizon = static_cast<std::uint64_t>(get_num(obj, "horizon", "policy", 0.0));
  p.arm_count = static_cast<int>(get_num(obj, "arm_count", "policy", 1.0));
  if (obj.contains("mode")) {
    const std::string mode = obj["mode"].get<std::string>();
    if (mode == "binary") p.mode = mechanism::PolicyMode::Binary;
    else if (mode == "k_arm") p.mode = mechanism::PolicyMode::KArm;
    else throw ConfigError("config: 'policy.mode' must be 'binary' or 'k_arm'");
  }
  if (obj.contains("incentivize")) {
    const std::string v = obj["incentivize"].get<std::string>();
    if (v == "never_takers") p.incentivize = mechanism::Incentivize::NeverTakers;
    else if (v == "always_takers") p.incentivize = mechanism::Incentivize::AlwaysTakers;
    else throw ConfigError("config: 'policy.incentivize' must be 'never_takers' or 'always_takers'");
  }
  if (obj.contains("sigma_g") && !obj["sigma_g"].is_null()) {
    p.sigma_g_override = get_num(obj, "sigma_g", "policy", 1.0);
  }
  p.xi_iterations = static_cast<std::uint64_t>(
      get_num(obj, "xi_iterations", "policy", 1000.0));
  p.compliant_type = static_cast<std::size_t>(
      get_num(obj, "compliant_type", "policy", 0.0));
  return p;
}

ExperimentConfig parse_experiment(const json& obj) {
  if (!obj.is_object()) throw ConfigError("config: 'experiment' must be an object");
  check_keys(obj, {"theta", "seeds", "checkpoints"}, "experiment");
  ExperimentConfig e;
  if (obj.contains("theta")) {
    if (obj["theta"].is_number()) {
      e.theta = {obj["theta"].get<double>()};
    } else if (obj["theta"].is_array()) {
      e.theta.clear();
      for (const auto& v : obj["theta"]) e.theta.push_back(v.get<double>());
    } else {
      throw ConfigError("config: 'experiment.theta' must be a number or array");
    }
  }
  e.seeds = static_cast<std::uint64_t>(get_num(obj, "seeds", "experiment", 5.0));
  if (obj.contains("checkpoints")) {
    if (!obj["checkpoints"].is_array()) {
      throw ConfigError("config: 'experiment.checkpoints' must be an array");
    }
    e.checkpoints.clear();
    for (const auto& v : obj["checkpoints"]) {
      e.checkpoints.push_back(v.get<std::uint64_t>());
    }
  }
  return e;
}

json truncated_to_json(const stats::TruncatedGaussian& d) {
  return json{{"mean", d.mean}, {"std", d.std_dev}, {"lower", d.lower},
              {"upper", d.upper}};
}

}  // namespace

Config parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  check_keys(doc, {"population", "policy", "experiment"}, "config");
  if (!doc.contains("population")) {
    throw ConfigError("config: missing key 'config.population'");
  }
  Config cfg;
  cfg.population = parse_population(doc["population"]);
  if (doc.contains("policy")) cfg.policy = parse_policy(doc["policy"]);
  if (doc.contains("experiment")) cfg.experiment = parse_experiment(doc["experiment"]);
  return cfg;
}

Config load_config_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("config: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_config(buffer.str());
}

std::string config_to_json(const Config& cfg) {
  json types = json::array();
  for (const auto& t : cfg.population.types) {
    json entry{{"fraction", t.fraction},
               {"theta_prior", truncated_to_json(t.prior.theta_prior)},
               {"baseline",
                {{"hyper_mean", t.prior.baseline.hyper_mean},
                 {"hyper_std", t.prior.baseline.hyper_std},
                 {"noise_std", t.prior.baseline.noise_std}}}};
    if (!t.prior.arm_priors.empty()) {
      json priors = json::array();
      for (const auto& p : t.prior.arm_priors) priors.push_back(truncated_to_json(p));
      entry["arm_priors"] = priors;
    }
    types.push_back(entry);
  }
  json policy{{"rho", cfg.policy.rho},
              {"ell", cfg.policy.ell},
              {"ell0", cfg.policy.ell0},
              {"ell1", cfg.policy.ell1},
              {"delta", cfg.policy.delta},
              {"h", cfg.policy.h},
              {"tau", cfg.policy.tau},
              {"horizon", cfg.policy.horizon},
              {"arm_count", cfg.policy.arm_count},
              {"mode", cfg.policy.mode == mechanism::PolicyMode::Binary ? "binary" : "k_arm"},
              {"incentivize",
               cfg.policy.incentivize == mechanism::Incentivize::NeverTakers
                   ? "never_takers" : "always_takers"},
              {"xi_iterations", cfg.policy.xi_iterations},
              {"compliant_type", cfg.policy.compliant_type}};
  if (cfg.policy.g_gap_bound) policy["g_gap_bound"] = *cfg.policy.g_gap_bound;
  if (cfg.policy.sigma_g_override) policy["sigma_g"] = *cfg.policy.sigma_g_override;
  json doc{{"population", {{"types", types}}},
           {"policy", policy},
           {"experiment",
            {{"theta", cfg.experiment.theta},
             {"seeds", cfg.experiment.seeds},
             {"checkpoints", cfg.experiment.checkpoints}}}};
  return doc.dump();
}

std::uint64_t config_hash(const Config& cfg) {
  const std::string text = config_to_json(cfg);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace ivlab::harness
