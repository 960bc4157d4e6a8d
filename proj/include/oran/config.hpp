#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "oran/net.hpp"
#include "oran/ppo.hpp"
#include "oran/transfer.hpp"

namespace oran::config {

// Runner knobs that are not part of the scenario or learner contracts.
struct RunConfig {
  int updates = 100;
  int master_updates = 100;
  int num_envs = 1;
  int eval_episodes = 2;
  std::vector<int> hidden_dims = {128, 128};
  std::vector<double> sweep_rates = {2.0, 4.0, 6.0, 8.0};
  int sweep_updates = 40;
};

struct ExperimentSpec {
  net::NetworkConfig network;          // target task
  bool has_source_network = false;
  net::NetworkConfig source_network;   // master's task; defaults to `network`
  ppo::PpoConfig ppo;
  transfer::TransferConfig transfer;
  RunConfig run;

  std::string mode;  // CLI subcommand
  std::string output_dir;
  std::vector<std::uint64_t> seeds = {1};
  std::string master_checkpoint;
  std::string transfer_mode = "random_init";

  const net::NetworkConfig& source() const {
    return has_source_network ? source_network : network;
  }
  void validate() const;
};

// Strict parse: unknown keys are rejected by name, missing keys keep the
// built-in defaults. Throws std::runtime_error with the offending key path.
ExperimentSpec load_config(const std::string& path);
ExperimentSpec parse_config(const nlohmann::json& j);

nlohmann::json dump_config(const ExperimentSpec& spec);

// Stable FNV-1a hash of the resolved config, hex-encoded.
std::string config_hash(const ExperimentSpec& spec);

}  // namespace oran::config
