#pragma once

#include <span>
#include <vector>

#include "oran/env.hpp"
#include "oran/nn.hpp"
#include "oran/rng.hpp"

namespace oran::ppo {

struct Transition {
  std::vector<double> state;   // flattened observation
  std::vector<int> action;     // per-head choices
  double log_prob_behavior = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
  double advantage = 0.0;
  double return_target = 0.0;
  double ee = 0.0;  // carried along for the training logs
};

struct PpoConfig {
  double clip_epsilon = 0.2;
  double discount = 0.99;
  double gae_lambda = 0.95;
  int epochs_per_batch = 4;
  int minibatch_size = 64;
  double actor_lr = 1e-5;
  double critic_lr = 1e-3;
  int rollout_ttis = 200;
  double grad_clip_norm = 0.5;

  void validate() const;
};

// One (environment, RU) trajectory plus the value bootstrap for its tail.
struct RolloutStream {
  std::vector<Transition> transitions;
  double bootstrap_value = 0.0;
};

struct RolloutBatch {
  std::vector<RolloutStream> streams;
  // rollout-level diagnostics
  double mean_reward = 0.0;
  double mean_ee = 0.0;
  double mean_psi = 0.0;
  double outage_rate = 0.0;  // dropped / arrived, 0 when nothing arrived

  std::vector<Transition> flatten() const;
  std::size_t size() const;
};

// Per-head log-probability of `choices` under the actor's output in `ws`.
double action_log_prob(const nn::Workspace& ws, std::span<const int> choices);

// Runs every environment for rollout_ttis TTIs, sampling the factorized
// policy per RU, recording behavior log-probs and critic values at sampling
// time. Environments auto-reset at episode boundaries (done flag set).
RolloutBatch collect_rollout(std::span<env::Environment> envs, const nn::Mlp& actor,
                             const nn::Mlp& critic, int rollout_ttis, Rng& rng);

// delta_t = r_t + discount * V_{t+1} * (1 - done) - V_t, accumulated with
// the (discount * lambda) geometric weighting; returns = advantage + value.
void compute_gae(RolloutStream& stream, double discount, double lambda);

// Batch normalization of advantages to mean 0, std 1.
void normalize_advantages(std::vector<Transition>& batch);

// min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)
double clipped_objective(double ratio, double advantage, double epsilon);

struct PolicyLoss {
  double loss = 0.0;  // negative mean clipped objective
  nn::Grad grad;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
};

PolicyLoss policy_loss(const std::vector<Transition>& batch, const nn::Mlp& actor,
                       double epsilon);

struct CriticLoss {
  double loss = 0.0;  // mean squared error against return targets
  nn::Grad grad;
};

CriticLoss critic_loss(const std::vector<Transition>& batch, const nn::Mlp& critic);

struct UpdateDiagnostics {
  double policy_loss = 0.0;
  double critic_loss = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
};

// epochs_per_batch passes of shuffled minibatch updates with gradient-norm
// clipping. Throws std::runtime_error with a diagnostic dump on NaN losses.
UpdateDiagnostics update(nn::Mlp& actor, nn::AdamState& actor_opt, nn::Mlp& critic,
                         nn::AdamState& critic_opt, std::vector<Transition>& batch,
                         const PpoConfig& cfg, Rng& rng);

// Head layout helpers shared by the training loops.
std::vector<nn::HeadSpec> actor_heads(const net::NetworkConfig& config);
std::vector<int> actor_dims(const net::NetworkConfig& config, const std::vector<int>& hidden);
std::vector<int> critic_dims(const net::NetworkConfig& config, const std::vector<int>& hidden);

}  // namespace oran::ppo
