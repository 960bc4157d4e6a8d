#pragma once

#include <string>
#include <vector>

#include "oran/nn.hpp"
#include "oran/ppo.hpp"

namespace oran::gradcheck {

struct Entry {
  std::string name;
  double max_rel_err = 0.0;
  int params_checked = 0;
  bool pass = false;
};

struct Report {
  std::vector<Entry> entries;
  bool all_pass() const;
};

inline constexpr double kFdStep = 1e-5;
inline constexpr double kRelTolerance = 1e-4;

// Central finite differences against the analytic gradients of the network
// backward pass, the PPO losses and the off-policy surrogate, each on a
// pinned small instance.
Report run_all(int params_per_check = 160);

// Building blocks, also used by the unit tests.
Entry check_backward(std::uint64_t seed, int params_per_check);
Entry check_policy_loss(std::uint64_t seed, int params_per_check);
Entry check_critic_loss(std::uint64_t seed, int params_per_check);
Entry check_off_policy(std::uint64_t seed, int params_per_check);
Entry check_distill(std::uint64_t seed, int params_per_check);

// Pinned transition batch over a random actor, with behavior log-probs from
// a nudged copy so the likelihood ratios sit away from 1 and the clip kinks.
std::vector<ppo::Transition> pinned_batch(const nn::Mlp& actor, std::uint64_t seed,
                                          int batch_size);

std::vector<double*> parameter_pointers(nn::Mlp& net);
std::vector<const double*> gradient_pointers(const nn::Grad& grad);

}  // namespace oran::gradcheck
