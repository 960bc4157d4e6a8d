#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oran/env.hpp"
#include "oran/net.hpp"
#include "oran/rng.hpp"

namespace oran::oracle {

// Enumerable single-TTI problem instance with pinned channel and traffic.
struct TinyInstance {
  net::NetworkConfig config;
  net::ChannelRealization realization;
  std::vector<net::UrllcTraffic> traffic;  // per RU

  void validate() const;  // enforces enumerability
};

// The repository's pinned instance: 1 DU, 2 RUs, 2 RBs, 2 mini-slots,
// 1 eMBB + 1 URLLC user per RU, 3 power levels.
TinyInstance default_tiny_instance();

struct JointAction {
  std::vector<env::AllocationAction> per_ru;
};

// Lexicographic mixed-radix enumeration of the feasible joint action set.
// Index 0 is the all-idle action.
class ActionEnumerator {
 public:
  explicit ActionEnumerator(const TinyInstance& instance);

  std::uint64_t count() const { return count_; }
  JointAction action_at(std::uint64_t index) const;

 private:
  const net::NetworkConfig* config_;
  std::vector<int> radix_;  // per digit, most significant first
  std::uint64_t count_ = 1;
};

inline constexpr std::uint64_t kMaxEnumerableActions = 1'000'000;

// Independent straight-line recomputation of the single-TTI energy
// efficiency. Shares no code with the phy/energy modules.
double oracle_ee(const TinyInstance& instance, const JointAction& action);

struct BruteForceResult {
  JointAction best_action;
  double best_ee = 0.0;
  std::uint64_t best_index = 0;
  std::vector<double> ee_table;  // indexed by enumeration order when kept
};

// Exhaustive argmax of oracle_ee over the feasible set; ties break toward
// the lexicographically first action. The scan partitions on fixed index
// blocks, so the result is identical for any thread count.
BruteForceResult brute_force_best(const TinyInstance& instance, bool keep_table = false);

struct CrossCheckResult {
  double oracle_value = 0.0;
  double env_value = 0.0;
  double rel_diff = 0.0;
  bool ok = false;
  std::string detail;  // per-term breakdown on mismatch
};

inline constexpr double kCrossCheckTolerance = 1e-12;

// Differential test: oracle recomputation against the environment's
// evaluation path for the same pinned instance and action.
CrossCheckResult cross_check(const TinyInstance& instance, const JointAction& action);

// Uniform over the per-head choice sets, then repaired.
JointAction random_action(const TinyInstance& instance, Rng& rng);
env::AllocationAction random_ru_action(const net::NetworkConfig& config, Rng& rng);

}  // namespace oran::oracle
