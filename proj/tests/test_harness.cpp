#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "common/invariants.hpp"
#include "ivlab/config.hpp"
#include "ivlab/csv.hpp"
#include "ivlab/errors.hpp"
#include "ivlab/experiments.hpp"
#include "ivlab/mechanism.hpp"

using namespace ivlab;
using harness::Config;

TEST_CASE("config parsing is strict about keys") {
  const std::string good = R"({
    "population": {"types": [
      {"fraction": 0.5, "theta_prior": {"mean": -0.5, "std": 1.0},
       "baseline": {"hyper_mean": 0.0, "hyper_std": 1.0, "noise_std": 1.0}},
      {"fraction": 0.5, "theta_prior": {"mean": 0.9, "std": 1.0},
       "baseline": {"hyper_mean": 0.1, "hyper_std": 1.0, "noise_std": 1.0}}
    ]},
    "policy": {"rho": 0.001, "ell": 1000, "delta": 0.0001},
    "experiment": {"theta": 0.5, "seeds": 3}
  })";
  const Config cfg = harness::parse_config(good);
  CHECK(cfg.population.types.size() == 2);
  CHECK(cfg.policy.rho == doctest::Approx(0.001));
  CHECK(cfg.experiment.seeds == 3);

  CHECK_THROWS_WITH_AS(
      harness::parse_config(R"({"population": {"types": []}, "polcy": {}})"),
      doctest::Contains("unknown key 'config.polcy'"), ConfigError);
  CHECK_THROWS_WITH_AS(
      harness::parse_config(
          R"({"population": {"types": [{"fraction": 1.0,
              "theta_prior": {"mean": -0.5, "std": 1.0}, "extra": 1}]}})"),
      doctest::Contains("extra"), ConfigError);
  CHECK_THROWS_AS(harness::parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(harness::parse_config(R"({"policy": {}})"), ConfigError);
}

TEST_CASE("config hash is stable and canonical") {
  const Config a = harness::fig1_config();
  const Config b = harness::fig1_config();
  CHECK(harness::config_hash(a) == harness::config_hash(b));
  Config c = a;
  c.policy.rho = 0.002;
  CHECK(harness::config_hash(a) != harness::config_hash(c));
  // serialization parses back to the same hash
  const Config reparsed = harness::parse_config(harness::config_to_json(a));
  CHECK(harness::config_hash(reparsed) == harness::config_hash(a));
}

TEST_CASE("result table emission") {
  harness::ResultTable empty;
  CHECK_THROWS_AS(harness::render_result_table(empty), ConfigError);

  harness::ResultTable single;
  single.columns = {"x", "y"};
  single.rows = {{1.0, 2.5}};
  single.seed_list = {9};
  const std::string text = harness::render_result_table(single);
  // two metadata lines, header, one row
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK(text.find("x,y\n1,2.5\n") != std::string::npos);
}

TEST_CASE("single-point rho table grid") {
  Config cfg;
  cfg.population = harness::fig1_config().population;
  cfg.policy.ell0 = 50;
  cfg.policy.ell1 = 50;
  cfg.policy.delta = 0.1;
  const auto result = harness::run_rho_table(5, {0.1}, {cfg}, 200);
  CHECK(result.table.rows.size() == 1);
  CHECK(result.table.columns.size() == 4);
  CHECK_THROWS_AS(harness::run_rho_table(5, {}, {}, 200), ConfigError);
}

TEST_CASE("constants dump names the calculus") {
  const std::string text = harness::render_constants(harness::fig1_config(), 7);
  CHECK(text.find("p_xi:") != std::string::npos);
  CHECK(text.find("rho_ceiling:") != std::string::npos);
  CHECK(text.find("racing_threshold:") != std::string::npos);
  CHECK(text.find("minimum_ell:") != std::string::npos);
}

TEST_CASE("reference priors put the exploration ceiling in the reported band") {
  const Config cfg = harness::fig1_config();
  const stats::StreamFamily streams{stats::RngSeed{7}};
  const auto constants =
      mechanism::compute_policy_constants(cfg.policy, cfg.population, streams);
  CHECK(constants.rho_ceilings[0] >= 0.001);
  CHECK(constants.rho_ceilings[0] <= 0.008);
  CHECK(constants.sampling_certificates[0]);  // rho = 0.001 qualifies
}

TEST_CASE("preset defaults match the reference experiment") {
  const Config fig1 = harness::fig1_config();
  CHECK(fig1.experiment.theta.front() == doctest::Approx(0.5));
  CHECK(fig1.policy.rho == doctest::Approx(0.001));
  CHECK(fig1.population.types.size() == 2);
  CHECK(fig1.population.types[0].fraction == doctest::Approx(0.5));
  CHECK(fig1.population.types[0].prior.theta_prior.mean == doctest::Approx(-0.5));
  CHECK(fig1.population.types[1].prior.theta_prior.mean == doctest::Approx(0.9));
  CHECK(fig1.population.types[0].prior.baseline.hyper_mean == doctest::Approx(0.0));
  CHECK(fig1.population.types[1].prior.baseline.hyper_mean == doctest::Approx(0.1));
  CHECK(fig1.experiment.seeds == 5);
  CHECK(harness::racing_config().policy.tau == doctest::Approx(0.43));
}

TEST_CASE("preset writes its files") {
  namespace fs = std::filesystem;
  const std::string dir = (fs::temp_directory_path() / "ivlab_preset_test").string();
  fs::remove_all(dir);
  const auto written = harness::run_preset("rho_table_gap", 3, dir, std::nullopt);
  REQUIRE(written.size() == 1);
  CHECK(fs::exists(written[0]));
  const auto parsed = harness::parse_result_table(written[0]);
  CHECK(parsed.rows.size() == 10);
  CHECK_THROWS_AS(harness::run_preset("no_such_preset", 3, dir, std::nullopt),
                  ConfigError);

  // curve presets produce the CSV/SVG pair
  const auto curve = harness::run_preset("racing_fig", 3, dir, std::nullopt);
  REQUIRE(curve.size() == 2);
  CHECK(curve[0].find("racing_fig.csv") != std::string::npos);
  CHECK(curve[1].find("racing_fig.svg") != std::string::npos);
  CHECK(fs::exists(curve[0]));
  CHECK(fs::exists(curve[1]));
  fs::remove_all(dir);
}

TEST_CASE("config file round trip through the loader") {
  namespace fs = std::filesystem;
  const std::string path =
      (fs::temp_directory_path() / "ivlab_config_test.json").string();
  {
    std::ofstream out(path);
    out << harness::config_to_json(harness::racing_config());
  }
  const Config loaded = harness::load_config_file(path);
  CHECK(harness::config_hash(loaded) ==
        harness::config_hash(harness::racing_config()));
  fs::remove(path);
  CHECK_THROWS_AS(harness::load_config_file(path), IoError);
}

TEST_CASE("harness invariants") {
  for (const auto& result : ivlab_tests::run_invariant_suite("harness.")) {
    INFO(result.name, ": ", result.detail);
    CHECK(result.passed);
  }
}
