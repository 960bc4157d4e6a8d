#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "oran/nn.hpp"
#include "oran/ppo.hpp"

namespace oran::transfer {

// Frozen teacher trained on the source task.
struct MasterPolicy {
  nn::Mlp actor;
  nn::Mlp critic;
  std::string source_task_id;
};

struct TransferConfig {
  double eta_initial = 1.0;
  double eta_decay = 0.995;  // per-update multiplicative factor
  double advantage_threshold = 0.0;
  int offpolicy_min_samples = 5000;
  std::size_t replay_capacity = 50000;

  void validate() const;
};

double eta_at(const TransferConfig& cfg, int update_idx);

// Summed cross-entropy sum_heads sum_a -p_master * log p_learner for one
// state. Learner probabilities are floored at 1e-12 inside the log.
double distill_loss(const std::vector<std::vector<double>>& master_probs,
                    const std::vector<std::vector<double>>& learner_probs);

struct DistillBatchResult {
  double loss = 0.0;  // mean over states
  nn::Grad grad;      // w.r.t. learner parameters
};

DistillBatchResult distill_loss_batch(const std::vector<std::vector<double>>& states,
                                      const nn::Mlp& master, const nn::Mlp& learner);

// clip_objective - eta * distill (both sides in maximization convention)
double on_policy_objective(double clip_objective, double distill, double eta);

// Episodic FIFO of transitions collected on the target task under the
// master policy (behavior log-probs are the master's).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  void push_episode(std::vector<ppo::Transition> episode);
  std::size_t size() const { return size_; }
  std::size_t num_episodes() const { return episodes_.size(); }
  const std::deque<std::vector<ppo::Transition>>& episodes() const { return episodes_; }

  // Refreshes values, advantages and return targets against the current
  // target-task critic. Stored rewards stay as collected.
  void recompute_advantages(const nn::Mlp& critic, double discount, double lambda);

 private:
  std::deque<std::vector<ppo::Transition>> episodes_;
  std::size_t capacity_ = 0;
  std::size_t size_ = 0;
};

// Keeps transitions with advantage > threshold, order preserved. An empty
// result signals the caller to skip the off-policy update.
std::vector<ppo::Transition> select_by_advantage(const ReplayBuffer& buffer, double threshold);

struct OffPolicyLoss {
  double objective = 0.0;  // mean clipped surrogate, maximization convention
  double loss = 0.0;       // -objective
  nn::Grad grad;           // gradient of the loss
  double mean_ratio = 0.0;
  std::size_t samples_used = 0;
};

// Clipped surrogate with ratio nu = pi_theta / pi_master; the critic is
// never updated from these samples.
OffPolicyLoss off_policy_objective(const std::vector<ppo::Transition>& batch,
                                   const nn::Mlp& actor, double epsilon);

enum class Mode { on_policy, off_policy, random_init };

Mode parse_mode(const std::string& name);
std::string mode_name(Mode mode);

struct TrainOptions {
  int updates = 100;
  int num_envs = 1;
  std::vector<int> hidden_dims = {128, 128};
  std::uint64_t seed = 1;
};

struct CurvePoint {
  int update_idx = 0;
  double mean_episode_reward = 0.0;
  double mean_ee = 0.0;
};

struct TrainLogRow {
  int update_idx = 0;
  double mean_reward = 0.0;
  double mean_ee = 0.0;
  double policy_loss = 0.0;
  double critic_loss = 0.0;
  double clip_fraction = 0.0;
  double psi_mean = 0.0;
  double outage_rate = 0.0;
};

struct TrainResult {
  nn::Mlp actor;
  nn::Mlp critic;
  nn::AdamState actor_opt;
  nn::AdamState critic_opt;
  std::vector<CurvePoint> curve;
  std::vector<TrainLogRow> log;
  std::size_t offpolicy_samples_consumed = 0;
};

// Trains one agent on `config` under the chosen transfer mode. `master`
// is required for on_policy / off_policy and must stay untouched.
TrainResult train_policy(const net::NetworkConfig& config, const ppo::PpoConfig& ppo_cfg,
                         const TransferConfig& transfer_cfg, const TrainOptions& options,
                         Mode mode, const MasterPolicy* master);

// Source/target channel-condition shift: steeper distance slope, heavier
// shadowing, fresh fading seed class.
net::NetworkConfig shifted_channel_config(const net::NetworkConfig& source);

struct ExperimentCurves {
  // curves[mode_index][seed_index]
  std::vector<std::vector<std::vector<CurvePoint>>> curves;
  std::vector<Mode> modes;
  std::vector<std::uint64_t> seeds;
};

// Trains a master on the source task, then one agent per (mode, seed) on
// the target task.
ExperimentCurves run_transfer_experiment(const std::vector<Mode>& modes,
                                         const net::NetworkConfig& source_config,
                                         const net::NetworkConfig& target_config,
                                         const ppo::PpoConfig& ppo_cfg,
                                         const TransferConfig& transfer_cfg,
                                         const TrainOptions& options,
                                         const std::vector<std::uint64_t>& seeds,
                                         const MasterPolicy* master = nullptr);

// Trains a master policy on the source task with random initialization.
MasterPolicy train_master(const net::NetworkConfig& source_config,
                          const ppo::PpoConfig& ppo_cfg, const TrainOptions& options,
                          const std::string& task_id);

}  // namespace oran::transfer
