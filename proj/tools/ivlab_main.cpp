#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ivlab/config.hpp"
#include "ivlab/csv.hpp"
#include "ivlab/errors.hpp"
#include "ivlab/estimator.hpp"
#include "ivlab/experiments.hpp"
#include "ivlab/mechanism.hpp"

namespace {

using ivlab::harness::Config;

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag_seed) {
  if (flag_seed) return *flag_seed;
  if (const char* env = std::getenv("IVLAB_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      throw ivlab::ConfigError("IVLAB_SEED must be an unsigned integer");
    }
  }
  return 1;
}

Config resolve_config(const std::string& config_path, const Config& fallback) {
  if (config_path.empty()) return fallback;
  return ivlab::harness::load_config_file(config_path);
}

ivlab::estimator::SampleSet read_samples(const std::string& path, int arms) {
  std::ifstream file(path);
  if (!file) throw ivlab::IoError("estimate: cannot open '" + path + "'");
  ivlab::estimator::SampleSet s;
  s.arm_count = arms;
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      if (line != "z,x,y") {
        throw ivlab::IoError("estimate: expected header 'z,x,y' in '" + path + "'");
      }
      header = false;
      continue;
    }
    std::istringstream row(line);
    std::string zs, xs, ys;
    if (!std::getline(row, zs, ',') || !std::getline(row, xs, ',') ||
        !std::getline(row, ys)) {
      throw ivlab::IoError("estimate: malformed record at line " +
                           std::to_string(line_no));
    }
    try {
      s.records.push_back({std::stoi(zs), std::stoi(xs), std::stod(ys)});
    } catch (...) {
      throw ivlab::IoError("estimate: malformed record at line " +
                           std::to_string(line_no));
    }
  }
  s.validate();
  return s;
}

const char* stage_name(ivlab::mechanism::Stage stage) {
  switch (stage) {
    case ivlab::mechanism::Stage::SamplingFirst: return "sampling1";
    case ivlab::mechanism::Stage::SamplingSecond: return "sampling2";
    case ivlab::mechanism::Stage::RacingPhase: return "racing";
    case ivlab::mechanism::Stage::Exploit: return "exploit";
  }
  return "?";
}

int cmd_constants(const std::string& config_path, std::uint64_t seed) {
  const Config cfg = resolve_config(config_path, ivlab::harness::fig1_config());
  std::cout << ivlab::harness::render_constants(cfg, seed);
  return 0;
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed,
                 const std::string& out_dir) {
  Config cfg = resolve_config(config_path, [] {
    Config c = ivlab::harness::regret_scaling_config();
    c.experiment.theta = {0.1};
    return c;
  }());
  const ivlab::stats::StreamFamily streams{ivlab::stats::RngSeed{seed}};
  const auto result =
      cfg.policy.mode == ivlab::mechanism::PolicyMode::KArm
          ? ivlab::mechanism::run_combined_policy_k(
                cfg.policy, cfg.population, cfg.experiment.theta, streams)
          : ivlab::mechanism::run_combined_policy(
                cfg.policy, cfg.population, cfg.experiment.theta.front(),
                streams);

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ivlab::IoError("simulate: cannot create out dir '" + out_dir + "'");
  const std::string path = (fs::path(out_dir) / "trajectory.csv").string();
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ivlab::IoError("simulate: cannot open '" + path + "'");
  file << "# config_hash=" << std::hex << ivlab::harness::config_hash(cfg)
       << std::dec << '\n';
  file << "# winner="
       << (result.winner ? std::to_string(*result.winner) : std::string("none"))
       << '\n';
  file << "# pseudo_regret="
       << ivlab::harness::format_double(result.regret.pseudo_regret) << '\n';
  file << "t,stage,phase,type,z,x,y,complied,explore\n";
  for (const auto& r : result.log.rounds) {
    file << r.t << ',' << stage_name(r.stage) << ',' << r.phase << ','
         << r.type_index << ',' << r.z << ',' << r.x << ','
         << ivlab::harness::format_double(r.y) << ',' << (r.complied ? 1 : 0)
         << ',' << (r.explore ? 1 : 0) << '\n';
  }
  std::cout << "wrote " << path << " (" << result.log.rounds.size()
            << " rounds, winner="
            << (result.winner ? std::to_string(*result.winner) : std::string("none"))
            << ", pseudo_regret="
            << ivlab::harness::format_double(result.regret.pseudo_regret)
            << ")\n";
  return 0;
}

int cmd_estimate(const std::string& input, int arms, double delta,
                 double sigma_g) {
  const auto samples = read_samples(input, arms);
  if (arms <= 1) {
    const double iv = ivlab::estimator::wald_estimate(samples);
    std::cout << "theta_hat_iv = " << ivlab::harness::format_double(iv) << '\n';
    try {
      const double ols = ivlab::estimator::ols_estimate(samples);
      std::cout << "theta_hat_ols = " << ivlab::harness::format_double(ols) << '\n';
    } catch (const ivlab::DegenerateError&) {
      std::cout << "theta_hat_ols = undefined (constant action)\n";
    }
    const double bound =
        ivlab::estimator::approximation_bound_binary(samples, delta, sigma_g);
    std::cout << "bound = " << ivlab::harness::format_double(bound)
              << " (delta = " << ivlab::harness::format_double(delta)
              << ", sigma_g = " << ivlab::harness::format_double(sigma_g)
              << ")\n";
  } else {
    const auto theta = ivlab::estimator::iv_estimate_k(samples);
    std::cout << "theta_hat_iv =";
    for (double v : theta) std::cout << ' ' << ivlab::harness::format_double(v);
    std::cout << '\n';
    const double bound =
        ivlab::estimator::approximation_bound_k(samples, delta, sigma_g);
    std::cout << "bound = " << ivlab::harness::format_double(bound) << '\n';
  }
  return 0;
}

int cmd_experiment(const std::string& preset, const std::string& config_path,
                   std::uint64_t seed, const std::string& out_dir) {
  std::optional<Config> override_cfg;
  if (!config_path.empty()) {
    override_cfg = ivlab::harness::load_config_file(config_path);
  }
  const auto written =
      ivlab::harness::run_preset(preset, seed, out_dir, override_cfg);
  for (const auto& path : written) std::cout << "wrote " << path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ivlab: seeded simulation lab for incentivized compliance and "
               "IV treatment-effect estimation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed_flag;
  app.add_option("--config", config_path, "JSON config file")
      ->envname("IVLAB_CONFIG");
  app.add_option("--seed", seed_flag, "base RNG seed (or env IVLAB_SEED)");
  app.add_option("--out-dir", out_dir, "output directory");

  auto* constants = app.add_subcommand(
      "constants", "dump the compliance calculus for a configuration");

  auto* simulate =
      app.add_subcommand("simulate", "run one combined policy, emit the log");

  auto* estimate =
      app.add_subcommand("estimate", "run estimators on a stored sample set");
  std::string input;
  int arms = 1;
  double delta = 0.05;
  double sigma_g = 1.0;
  estimate->add_option("--input", input, "samples CSV (header z,x,y)")
      ->required();
  estimate->add_option("--arms", arms, "arm count (1 = binary)");
  estimate->add_option("--delta", delta, "failure probability for the bound");
  estimate->add_option("--sigma-g", sigma_g, "sub-Gaussian norm of baselines");

  auto* experiment =
      app.add_subcommand("experiment", "run a preset, emit CSV/SVG");
  std::string preset;
  experiment
      ->add_option("preset", preset,
                   "one of: fig1, racing_fig, rho_table_gap, "
                   "rho_table_variance, coverage, regret_scaling, karm_demo")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const std::uint64_t seed = resolve_seed(seed_flag);
    if (constants->parsed()) return cmd_constants(config_path, seed);
    if (simulate->parsed()) return cmd_simulate(config_path, seed, out_dir);
    if (estimate->parsed()) return cmd_estimate(input, arms, delta, sigma_g);
    if (experiment->parsed())
      return cmd_experiment(preset, config_path, seed, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
