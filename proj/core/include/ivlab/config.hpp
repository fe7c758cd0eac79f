#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ivlab/agents.hpp"
#include "ivlab/mechanism.hpp"

namespace ivlab::harness {

struct ExperimentConfig {
  std::vector<double> theta{0.5};
  std::uint64_t seeds = 5;
  std::vector<std::uint64_t> checkpoints;
};

struct Config {
  agents::PopulationSpec population;
  mechanism::PolicyConfig policy;
  ExperimentConfig experiment;
};

// Parses the single-document JSON config with sections `population`,
// `policy`, `experiment`. Unknown keys are a hard error naming the offending
// key; structural problems name the section.
Config parse_config(const std::string& json_text);
Config load_config_file(const std::string& path);

// Canonical serialization (sorted keys) and its FNV-1a hash; recorded in
// every emitted artifact.
std::string config_to_json(const Config& cfg);
std::uint64_t config_hash(const Config& cfg);

}  // namespace ivlab::harness
