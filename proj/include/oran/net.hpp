#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "oran/energy.hpp"
#include "oran/phy.hpp"
#include "oran/rng.hpp"

namespace oran::net {

enum class EmbbRewardTerm { shortfall_penalty, verbatim };

struct NetworkConfig {
  int num_dus = 4;
  int rus_per_du = 2;
  int embb_users_per_ru = 2;
  int urllc_users_per_ru = 2;
  int num_rbs = 100;
  double system_bandwidth_hz = 20e6;
  double cell_radius_m = 8.9206;  // disc covering 250 m^2
  double min_link_distance_m = 1.0;
  double pathloss_fixed_db = 120.8;
  double pathloss_slope_db = 37.5;
  double shadowing_sigma_db = 4.0;
  phy::PhyConstants phy;
  energy::PowerConfig power;
  double urllc_arrival_rate = 2.0;  // packets per mini-slot
  int urllc_packet_bytes = 32;
  int harq_rtt_ttis = 1;
  int harq_max_retx = 1;
  double urllc_outage_target = 1e-5;
  double embb_min_rate_bps = 5e6;  // per RU
  std::uint64_t rng_seed = 1;

  // scheduler/agent knobs
  int num_power_levels = 5;      // {0, 1/4, 1/2, 3/4, 1} * (p_max / K)
  double ee_scale = 1e5;         // bit/J normalizer for the reward's EE term
  double kappa_e = 1.0;          // weight of the eMBB shortfall penalty
  int outage_window_ttis = 50;
  int episode_ttis = 200;
  EmbbRewardTerm embb_reward_term = EmbbRewardTerm::shortfall_penalty;
  bool pinned_channel = false;   // freeze the TTI-0 realization for all TTIs

  int num_rus() const { return num_dus * rus_per_du; }
  int num_embb_users() const { return num_rus() * embb_users_per_ru; }
  int num_urllc_users() const { return num_rus() * urllc_users_per_ru; }
  int urllc_packet_bits() const { return urllc_packet_bytes * 8; }
  double rb_power_unit_w() const { return power.p_max_w / static_cast<double>(num_rbs); }

  void validate() const;  // throws std::domain_error naming the offending field
};

// (ru, user, rb) gain tensor
struct GainTensor {
  int num_rus = 0, num_users = 0, num_rbs = 0;
  std::vector<double> data;

  GainTensor() = default;
  GainTensor(int rus, int users, int rbs)
      : num_rus(rus), num_users(users), num_rbs(rbs),
        data(static_cast<std::size_t>(rus) * users * rbs, 0.0) {}

  double& at(int ru, int user, int rb) {
    return data[(static_cast<std::size_t>(ru) * num_users + user) * num_rbs + rb];
  }
  double at(int ru, int user, int rb) const {
    return data[(static_cast<std::size_t>(ru) * num_users + user) * num_rbs + rb];
  }
};

struct ChannelRealization {
  GainTensor embb_gain;   // (ru, embb user, rb), user index is network-wide
  GainTensor urllc_gain;  // (ru, urllc user, rb)
  int tti_index = 0;
};

struct UrllcTraffic {
  std::vector<int> arrivals_per_minislot;
  int total = 0;
  int backlog = 0;  // packets awaiting service including HARQ retransmissions
};

struct Position {
  double x = 0.0, y = 0.0;
};

struct NetworkState {
  NetworkConfig config;
  std::vector<Position> ru_xy;
  std::vector<Position> embb_user_xy;   // network-wide user index
  std::vector<Position> urllc_user_xy;
  // pathloss + shadowing in dB per (ru, user), fading excluded
  std::vector<double> embb_attenuation_db;   // ru * num_embb_users + user
  std::vector<double> urllc_attenuation_db;

  int home_ru_of_embb(int user) const { return user / config.embb_users_per_ru; }
  int home_ru_of_urllc(int user) const { return user / config.urllc_users_per_ru; }
  int du_of_ru(int ru) const { return ru / config.rus_per_du; }
};

// Places RUs on a grid with 2*cell_radius spacing and users uniformly in
// their RU's disc; draws static log-normal shadowing per (RU, user).
// Deterministic under config.rng_seed.
NetworkState build_network(const NetworkConfig& config);

// Applies per-(ru, user, rb, tti) Rayleigh block fading on top of the static
// attenuations. Deterministic under (seed, tti); entries use independent
// counter-based streams, so the fill parallelizes without ordering effects.
ChannelRealization sample_channels(const NetworkState& state, int tti);
ChannelRealization sample_channels(const NetworkState& state, int tti, std::uint64_t seed);

// Independent Poisson(rate) draws per mini-slot.
UrllcTraffic sample_urllc_arrivals(double rate, int m_slots, Rng& rng);

// p_succ = (1 - BER)^tb_bits with coherent-QPSK BER(Omega) = Q(sqrt(2*Omega))
double harq_success_probability(double sinr_value, int tb_bits);

struct HarqEntry {
  long packet_id = 0;
  int retransmit_at_tti = 0;
  int retx_count = 0;  // retransmissions already consumed
};

struct HarqProcess {
  std::vector<HarqEntry> pending;
  int max_retx = 1;
  int rtt_ttis = 1;
  long outage_count = 0;
};

struct HarqOutcome {
  long packet_id = 0;
  bool success = false;
};

struct HarqStepResult {
  std::vector<HarqEntry> due_now;   // retransmissions scheduled for this TTI
  std::vector<long> outage_packets;
};

// Pops entries due at `tti`, then books each failed outcome either as a
// retransmission at tti + rtt or, past max_retx, as an outage.
HarqStepResult harq_step(HarqProcess& process, int tti,
                         std::span<const HarqOutcome> outcomes,
                         std::span<const int> outcome_retx_counts);

}  // namespace oran::net
