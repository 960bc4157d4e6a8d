#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "oran/net.hpp"

namespace oran::env {

// Observation of one RU-level decision point. Raw fields here; flatten()
// applies the fixed normalization the policy input expects.
struct AgentState {
  std::vector<double> embb_gain_summary;   // per own eMBB user, wideband mean in [-1, 1]
  std::vector<double> urllc_gain_summary;  // per own URLLC user
  double traffic_load = 0.0;               // arrivals(t) * packet bytes
  int backlog = 0;
  int num_embb_users = 0;
  int num_urllc_users = 0;

  std::vector<double> flatten(const net::NetworkConfig& config) const;
  static int dim(const net::NetworkConfig& config);
};

// Joint per-RU decision: RB -> eMBB user, RB -> power level, (RB, mini-slot)
// -> URLLC user. Index -1 means unassigned. rb_power_w carries the effective
// transmit power; repair_action rescales it when the budget is exceeded.
struct AllocationAction {
  int num_rbs = 0;
  int num_minislots = 0;
  std::vector<int> rb_user;
  std::vector<int> rb_power_level;
  std::vector<double> rb_power_w;
  std::vector<int> puncture;  // num_rbs * num_minislots, cell (k, m) at k*M + m

  int puncture_at(int k, int m) const { return puncture[k * num_minislots + m]; }
  int& puncture_at(int k, int m) { return puncture[k * num_minislots + m]; }
  int punctured_count(int k) const;
  int punctured_count_by(int k, int urllc_user) const;
  bool rb_active(int k) const;
};

// Head layout of the factorized policy: K user heads, K power heads, K*M
// puncture heads, in that order.
struct ActionLayout {
  int num_rbs = 0;
  int num_minislots = 0;
  int user_choices = 0;      // embb_users_per_ru + 1 (choice 0 = idle)
  int power_choices = 0;
  int puncture_choices = 0;  // urllc_users_per_ru + 1

  int num_heads() const { return num_rbs * 2 + num_rbs * num_minislots; }
  std::vector<int> head_sizes() const;
};

ActionLayout action_layout(const net::NetworkConfig& config);
double power_level_w(const net::NetworkConfig& config, int level);
AllocationAction decode_action(std::span<const int> head_choices,
                               const net::NetworkConfig& config);

struct DualState {
  double psi = 0.0;
  double phi = 0.0;
  double sigma_u = 1e-5;
};

// Psi(t+1) = max{Psi(t) + Phi(t) - sigma_u, 0}
DualState dual_update(const DualState& dual);

struct ConstraintReport {
  bool rb_single_user = false;      // 9b
  bool cell_single_urllc = false;   // 9c
  bool puncture_within_m = false;   // 9d
  bool power_budget = false;        // 9g
  bool power_nonneg = false;        // 9h
  bool alpha_binary = false;        // 9i
  bool delta_binary = false;        // 9j

  bool all() const {
    return rb_single_user && cell_single_urllc && puncture_within_m && power_budget &&
           power_nonneg && alpha_binary && delta_binary;
  }
};

// Clamps indices into range, zeroes negative powers and rescales the total
// to the per-RU budget. Output passes check_constraints for any raw input.
AllocationAction repair_action(const AllocationAction& raw, const net::NetworkConfig& config);

// Independent verifier: lowers the action to binary indicator tensors and
// checks the per-TTI constraints literally. Shares no logic with
// repair_action.
ConstraintReport check_constraints(const AllocationAction& action,
                                   const net::NetworkConfig& config);

struct EpisodeConstraintReport {
  bool urllc_reliability = false;  // 9e: outage frequency <= sigma_u
  bool embb_reliability = false;   // 9f: mean per-RU eMBB rate >= min rate
};

EpisodeConstraintReport check_episode_constraints(double outage_frequency,
                                                  double mean_embb_rate_per_ru_bps,
                                                  const net::NetworkConfig& config);

// Fraction of resolved packets that failed delivery; empty window -> 0.
double measure_outage(std::span<const bool> delivered_window);

// Static single-TTI evaluation of rates, powers and EE for a joint action.
struct RuEvaluation {
  std::vector<double> embb_rb_rates;       // per RB, 0 when unassigned
  std::vector<double> embb_user_rates;     // per own eMBB user
  std::vector<double> urllc_user_rates;    // per own URLLC user
  double embb_rate_total = 0.0;
  double urllc_rate_total = 0.0;
  double urllc_mean_sinr = 0.0;            // puncture-weighted
  double tx_power_w = 0.0;
};

struct NetworkEvaluation {
  std::vector<RuEvaluation> per_ru;
  std::vector<double> du_sum_rate_bps;
  std::vector<double> du_tx_power_w;
  std::vector<double> du_total_power_w;
  std::vector<double> du_ee;
  double network_sum_rate_bps = 0.0;
  double network_total_power_w = 0.0;
  double network_ee = 0.0;
};

NetworkEvaluation evaluate_network(const net::NetworkConfig& config,
                                   const net::ChannelRealization& realization,
                                   std::span<const AllocationAction> per_ru_actions);

// One DU's step result.
struct StepOutcome {
  double reward = 0.0;
  double ee = 0.0;
  double sum_rate_bps = 0.0;
  double embb_rate_bps = 0.0;
  double urllc_rate_bps = 0.0;
  std::vector<double> embb_rates;  // per eMBB user of this DU
  double urllc_deficit_bits = 0.0;
  double embb_shortfall = 0.0;     // normalized shortfall summed over the DU's RUs
  bool outage_flag = false;
  double psi = 0.0;                // weight applied in this reward
  double phi = 0.0;                // outage estimate measured this TTI
  ConstraintReport constraints;
  int packets_arrived = 0;
  int packets_served = 0;
  int packets_dropped = 0;
};

struct Packet {
  long id = 0;
  int arrival_tti = 0;
  int deadline_tti = 0;
  int retx_count = 0;
};

// Full-network MDP. One instance simulates every RU of the scenario for one
// experiment seed; each RU is a decision point observing only its own users.
// All randomness is drawn from counter-based streams keyed by
// (seed, instance, purpose, tti, ...) so stepping is exactly reproducible.
class Environment {
 public:
  Environment(const net::NetworkConfig& config, std::uint64_t seed,
              std::uint64_t instance_id = 0);

  int num_rus() const { return state_.config.num_rus(); }
  int num_dus() const { return state_.config.num_dus; }
  int du_of_ru(int ru) const { return state_.du_of_ru(ru); }
  const net::NetworkState& network() const { return state_; }
  const net::NetworkConfig& config() const { return state_.config; }

  // Starts a fresh episode: queues, HARQ, outage windows and dual weights
  // reset; the global TTI counter keeps advancing so fading never repeats.
  void reset();

  // Samples the channel realization and URLLC arrivals for the pending TTI.
  // Idempotent until the next step().
  void prepare_tti();
  bool tti_prepared() const { return prepared_; }
  const net::ChannelRealization& realization() const;
  const net::UrllcTraffic& traffic(int ru) const;

  AgentState observe(int ru) const;

  // Advances one TTI with the given per-RU actions (repaired internally).
  std::vector<StepOutcome> step(std::span<const AllocationAction> per_ru_actions);

  int tti() const { return tti_; }
  int tti_in_episode() const { return tti_in_episode_; }
  bool episode_done() const { return tti_in_episode_ >= state_.config.episode_ttis; }

  const DualState& dual(int du) const { return duals_[du]; }
  void set_dual(int du, const DualState& dual) { duals_[du] = dual; }

  // Arrived/served/dropped packet ledger, for conservation checks.
  long total_arrived() const { return total_arrived_; }
  long total_served() const { return total_served_; }
  long total_dropped() const { return total_dropped_; }
  long in_flight() const;

 private:
  struct RuQueue {
    std::deque<Packet> queue;
    net::HarqProcess harq;
  };

  net::NetworkState state_;
  std::uint64_t seed_ = 0;
  std::uint64_t instance_id_ = 0;
  int tti_ = 0;
  int tti_in_episode_ = 0;
  bool prepared_ = false;
  net::ChannelRealization current_;
  net::ChannelRealization pinned_;
  bool pinned_ready_ = false;
  std::vector<net::UrllcTraffic> current_traffic_;
  std::vector<RuQueue> queues_;
  std::vector<DualState> duals_;
  std::vector<std::deque<std::pair<int, bool>>> outcome_windows_;  // per DU: (tti, delivered)
  long next_packet_id_ = 0;
  long total_arrived_ = 0;
  long total_served_ = 0;
  long total_dropped_ = 0;
};

AgentState encode_state(const net::ChannelRealization& realization,
                        const net::UrllcTraffic& traffic, int ru, int backlog,
                        const net::NetworkConfig& config);

void write_episode_trace_header(std::string& out);

}  // namespace oran::env
