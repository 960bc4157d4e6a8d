#include "oran/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "oran/parallel.hpp"

namespace oran::oracle {

namespace {

// Bisection inverse of the Gaussian tail, used only by the oracle path.
double bisect_q_inv(double x) {
  double lo = -42.0, hi = 42.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double q = 0.5 * std::erfc(mid / std::sqrt(2.0));
    if (q > x)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double oracle_ee_impl(const TinyInstance& instance, const JointAction& action, double qinv_x) {
  const net::NetworkConfig& cfg = instance.config;
  const int num_rus = cfg.num_rus();
  const int num_rbs = cfg.num_rbs;
  const int m = cfg.phy.minislots_per_tti;
  const int we = cfg.embb_users_per_ru;
  const int wu = cfg.urllc_users_per_ru;
  const double bandwidth = cfg.phy.rb_bandwidth_hz;
  const double noise = cfg.phy.noise_power_w;
  const double symbols =
      static_cast<double>(cfg.phy.symbols_per_minislot * cfg.phy.subcarriers_per_rb);

  // transmit power map: nonzero only where the RB carries a transmission
  std::vector<std::vector<double>> p(static_cast<std::size_t>(num_rus),
                                     std::vector<double>(static_cast<std::size_t>(num_rbs), 0.0));
  for (int l = 0; l < num_rus; ++l) {
    const env::AllocationAction& a = action.per_ru[static_cast<std::size_t>(l)];
    for (int k = 0; k < num_rbs; ++k) {
      bool transmits = a.rb_user[k] >= 0;
      for (int slot = 0; slot < m && !transmits; ++slot)
        if (a.puncture_at(k, slot) >= 0) transmits = true;
      if (transmits) p[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)] =
          a.rb_power_w[k];
    }
  }

  double sum_rate = 0.0;
  double sum_tx_power = 0.0;
  for (int l = 0; l < num_rus; ++l) {
    const env::AllocationAction& a = action.per_ru[static_cast<std::size_t>(l)];

    for (int k = 0; k < num_rbs; ++k) {
      const int w = a.rb_user[k];
      if (w < 0) continue;
      const int user = l * we + w;
      double interference = 0.0;
      for (int other = 0; other < num_rus; ++other) {
        if (other == l) continue;
        interference += p[static_cast<std::size_t>(other)][static_cast<std::size_t>(k)] *
                        instance.realization.embb_gain.at(other, user, k);
      }
      const double omega = p[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)] *
                           instance.realization.embb_gain.at(l, user, k) /
                           (interference + noise);
      int punctured = 0;
      for (int slot = 0; slot < m; ++slot)
        if (a.puncture_at(k, slot) >= 0) ++punctured;
      sum_rate += bandwidth *
                  (1.0 - static_cast<double>(punctured) / static_cast<double>(m)) *
                  std::log2(1.0 + omega);
    }

    for (int u = 0; u < wu; ++u) {
      const int user = l * wu + u;
      for (int k = 0; k < num_rbs; ++k) {
        int punctured = 0;
        for (int slot = 0; slot < m; ++slot)
          if (a.puncture_at(k, slot) == u) ++punctured;
        if (punctured == 0) continue;
        double interference = 0.0;
        for (int other = 0; other < num_rus; ++other) {
          if (other == l) continue;
          interference += p[static_cast<std::size_t>(other)][static_cast<std::size_t>(k)] *
                          instance.realization.urllc_gain.at(other, user, k);
        }
        const double omega = p[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)] *
                             instance.realization.urllc_gain.at(l, user, k) /
                             (interference + noise);
        const double dispersion = 1.0 - 1.0 / ((1.0 + omega) * (1.0 + omega));
        const double bracket =
            std::log2(1.0 + omega) - std::sqrt(dispersion / symbols) * qinv_x;
        if (bracket > 0.0)
          sum_rate += bandwidth *
                      (static_cast<double>(punctured) / static_cast<double>(m)) * bracket;
      }
    }

    for (int k = 0; k < num_rbs; ++k)
      sum_tx_power += p[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)];
  }

  const double total_power = sum_tx_power +
                             static_cast<double>(num_rus) * cfg.power.ru_circuit_power_w +
                             static_cast<double>(cfg.num_dus) * cfg.power.du_power_w;
  return sum_rate / total_power;
}

}  // namespace

void TinyInstance::validate() const {
  config.validate();
  const ActionEnumerator enumerator(*this);  // throws when not enumerable
  (void)enumerator;
  if (static_cast<int>(traffic.size()) != config.num_rus())
    throw std::domain_error("tiny instance: traffic entries must match RU count");
}

TinyInstance default_tiny_instance() {
  TinyInstance instance;
  net::NetworkConfig& cfg = instance.config;
  cfg.num_dus = 1;
  cfg.rus_per_du = 2;
  cfg.embb_users_per_ru = 1;
  cfg.urllc_users_per_ru = 1;
  cfg.num_rbs = 2;
  cfg.phy.minislots_per_tti = 2;
  cfg.phy.noise_power_w = 1e-15;
  cfg.num_power_levels = 3;
  cfg.urllc_arrival_rate = 0.5;
  cfg.episode_ttis = 200;
  cfg.pinned_channel = true;
  cfg.rng_seed = 97;

  instance.realization.tti_index = 0;
  instance.realization.embb_gain = net::GainTensor(2, 2, 2);
  instance.realization.urllc_gain = net::GainTensor(2, 2, 2);
  auto& eg = instance.realization.embb_gain;
  eg.at(0, 0, 0) = 4.0e-9;
  eg.at(0, 0, 1) = 1.0e-9;
  eg.at(0, 1, 0) = 1.5e-10;
  eg.at(0, 1, 1) = 2.0e-10;
  eg.at(1, 0, 0) = 3.0e-10;
  eg.at(1, 0, 1) = 1.0e-10;
  eg.at(1, 1, 0) = 3.5e-9;
  eg.at(1, 1, 1) = 3.0e-9;
  auto& ug = instance.realization.urllc_gain;
  ug.at(0, 0, 0) = 2.0e-9;
  ug.at(0, 0, 1) = 2.5e-9;
  ug.at(0, 1, 0) = 2.5e-10;
  ug.at(0, 1, 1) = 1.2e-10;
  ug.at(1, 0, 0) = 2.0e-10;
  ug.at(1, 0, 1) = 3.0e-10;
  ug.at(1, 1, 0) = 1.8e-9;
  ug.at(1, 1, 1) = 2.2e-9;

  net::UrllcTraffic t0;
  t0.arrivals_per_minislot = {1, 0};
  t0.total = 1;
  net::UrllcTraffic t1;
  t1.arrivals_per_minislot = {0, 1};
  t1.total = 1;
  instance.traffic = {t0, t1};
  return instance;
}

ActionEnumerator::ActionEnumerator(const TinyInstance& instance) : config_(&instance.config) {
  const net::NetworkConfig& cfg = instance.config;
  const int positions = cfg.num_rus() * cfg.num_rbs;
  const int user_choices = cfg.embb_users_per_ru + 1;
  const int puncture_choices = cfg.urllc_users_per_ru + 1;
  for (int pos = 0; pos < positions; ++pos) {
    radix_.push_back(user_choices);
    radix_.push_back(cfg.num_power_levels);
    for (int slot = 0; slot < cfg.phy.minislots_per_tti; ++slot)
      radix_.push_back(puncture_choices);
  }
  for (int r : radix_) {
    if (count_ > kMaxEnumerableActions / static_cast<std::uint64_t>(r)) {
      std::ostringstream oss;
      oss << "oracle: action space exceeds " << kMaxEnumerableActions
          << " joint actions (at least " << count_ << " x " << r << "); refusing to enumerate";
      throw std::domain_error(oss.str());
    }
    count_ *= static_cast<std::uint64_t>(r);
  }
}

JointAction ActionEnumerator::action_at(std::uint64_t index) const {
  if (index >= count_) throw std::domain_error("oracle: action index out of range");
  std::vector<int> digits(radix_.size(), 0);
  for (int d = static_cast<int>(radix_.size()) - 1; d >= 0; --d) {
    const std::uint64_t r = static_cast<std::uint64_t>(radix_[static_cast<std::size_t>(d)]);
    digits[static_cast<std::size_t>(d)] = static_cast<int>(index % r);
    index /= r;
  }

  const net::NetworkConfig& cfg = *config_;
  const int m = cfg.phy.minislots_per_tti;
  JointAction joint;
  std::size_t d = 0;
  for (int ru = 0; ru < cfg.num_rus(); ++ru) {
    env::AllocationAction a;
    a.num_rbs = cfg.num_rbs;
    a.num_minislots = m;
    a.rb_user.resize(cfg.num_rbs);
    a.rb_power_level.resize(cfg.num_rbs);
    a.rb_power_w.resize(cfg.num_rbs);
    a.puncture.resize(static_cast<std::size_t>(cfg.num_rbs) * m);
    for (int k = 0; k < cfg.num_rbs; ++k) {
      a.rb_user[k] = digits[d++] - 1;
      a.rb_power_level[k] = digits[d++];
      a.rb_power_w[k] = env::power_level_w(cfg, a.rb_power_level[k]);
      for (int slot = 0; slot < m; ++slot) a.puncture_at(k, slot) = digits[d++] - 1;
    }
    joint.per_ru.push_back(std::move(a));
  }
  return joint;
}

double oracle_ee(const TinyInstance& instance, const JointAction& action) {
  return oracle_ee_impl(instance, action, bisect_q_inv(instance.config.phy.urllc_error_target));
}

BruteForceResult brute_force_best(const TinyInstance& instance, bool keep_table) {
  instance.validate();
  const ActionEnumerator enumerator(instance);
  const std::uint64_t total = enumerator.count();
  const double qinv_x = bisect_q_inv(instance.config.phy.urllc_error_target);

  constexpr std::uint64_t kBlock = 4096;
  const std::uint64_t num_blocks = (total + kBlock - 1) / kBlock;
  std::vector<double> block_best_ee(num_blocks, -1.0);
  std::vector<std::uint64_t> block_best_idx(num_blocks, 0);

  BruteForceResult result;
  if (keep_table) result.ee_table.resize(total);

  const long long blocks = static_cast<long long>(num_blocks);
#pragma omp parallel for schedule(static) num_threads(parallel::max_threads()) \
    if (parallel::enabled())
  for (long long b = 0; b < blocks; ++b) {
    const std::uint64_t lo = static_cast<std::uint64_t>(b) * kBlock;
    const std::uint64_t hi = std::min(total, lo + kBlock);
    double best_ee = -1.0;
    std::uint64_t best_idx = lo;
    for (std::uint64_t idx = lo; idx < hi; ++idx) {
      const double ee = oracle_ee_impl(instance, enumerator.action_at(idx), qinv_x);
      if (keep_table) result.ee_table[idx] = ee;
      if (ee > best_ee) {
        best_ee = ee;
        best_idx = idx;
      }
    }
    block_best_ee[static_cast<std::size_t>(b)] = best_ee;
    block_best_idx[static_cast<std::size_t>(b)] = best_idx;
  }

  double best_ee = -1.0;
  std::uint64_t best_idx = 0;
  for (std::uint64_t b = 0; b < num_blocks; ++b) {
    if (block_best_ee[b] > best_ee) {
      best_ee = block_best_ee[b];
      best_idx = block_best_idx[b];
    }
  }
  result.best_ee = best_ee;
  result.best_index = best_idx;
  result.best_action = enumerator.action_at(best_idx);
  return result;
}

CrossCheckResult cross_check(const TinyInstance& instance, const JointAction& action) {
  CrossCheckResult result;
  result.oracle_value = oracle_ee(instance, action);
  const env::NetworkEvaluation eval =
      env::evaluate_network(instance.config, instance.realization, action.per_ru);
  result.env_value = eval.network_ee;
  const double denom =
      std::max(std::max(std::abs(result.oracle_value), std::abs(result.env_value)), 1e-30);
  result.rel_diff = std::abs(result.oracle_value - result.env_value) / denom;
  result.ok = result.rel_diff <= kCrossCheckTolerance;
  if (!result.ok) {
    std::ostringstream oss;
    oss << "cross_check mismatch: oracle_ee=" << result.oracle_value
        << " env_ee=" << result.env_value << " rel_diff=" << result.rel_diff
        << "; env sum_rate=" << eval.network_sum_rate_bps
        << " env total_power=" << eval.network_total_power_w;
    for (std::size_t ru = 0; ru < eval.per_ru.size(); ++ru)
      oss << "; ru" << ru << " embb=" << eval.per_ru[ru].embb_rate_total
          << " urllc=" << eval.per_ru[ru].urllc_rate_total
          << " tx=" << eval.per_ru[ru].tx_power_w;
    result.detail = oss.str();
  }
  return result;
}

env::AllocationAction random_ru_action(const net::NetworkConfig& config, Rng& rng) {
  const env::ActionLayout layout = env::action_layout(config);
  std::vector<int> choices;
  choices.reserve(static_cast<std::size_t>(layout.num_heads()));
  for (int size : layout.head_sizes()) choices.push_back(rng.uniform_int(size));
  return env::repair_action(env::decode_action(choices, config), config);
}

JointAction random_action(const TinyInstance& instance, Rng& rng) {
  JointAction joint;
  for (int ru = 0; ru < instance.config.num_rus(); ++ru)
    joint.per_ru.push_back(random_ru_action(instance.config, rng));
  return joint;
}

}  // namespace oran::oracle
