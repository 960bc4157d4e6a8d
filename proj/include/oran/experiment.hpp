#pragma once

#include <cstdint>
#include <string>

#include "oran/config.hpp"
#include "oran/transfer.hpp"

namespace oran::experiment {

struct EvalResult {
  double mean_reward = 0.0;
  double mean_ee = 0.0;
  double outage_rate = 0.0;
  double mean_embb_rate_per_ru_bps = 0.0;
};

// Greedy (argmax-per-head) evaluation over full episodes, optionally
// emitting the per-TTI episode trace CSV.
EvalResult evaluate_policy(const net::NetworkConfig& config, const nn::Mlp& actor,
                           std::uint64_t seed, int episodes,
                           const std::string& trace_csv_path = "");

void save_master(const transfer::MasterPolicy& master, const std::string& path,
                 const std::string& config_hash);
transfer::MasterPolicy load_master(const std::string& path);

// Dispatches one experiment spec: train_master, train, eval, sweep_arrival,
// oracle or gradcheck. Writes artifacts under spec.output_dir and returns
// the process exit code.
int run(const config::ExperimentSpec& spec);

std::string code_version();

}  // namespace oran::experiment
