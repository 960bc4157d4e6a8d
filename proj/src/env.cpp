#include "oran/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oran::env {

namespace {
constexpr std::uint64_t kStreamChannel = 0x6368616eULL;
constexpr std::uint64_t kStreamArrival = 0x61727276ULL;
constexpr std::uint64_t kStreamHarq = 0x68617271ULL;

constexpr double kGainClipLoDb = -150.0;
constexpr double kGainClipHiDb = -30.0;

double clip(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }
}  // namespace

std::vector<double> AgentState::flatten(const net::NetworkConfig& config) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(dim(config)));
  out.insert(out.end(), embb_gain_summary.begin(), embb_gain_summary.end());
  out.insert(out.end(), urllc_gain_summary.begin(), urllc_gain_summary.end());
  const double expected_packets =
      std::max(1.0, config.urllc_arrival_rate * config.phy.minislots_per_tti);
  const double packets = traffic_load / std::max(1, config.urllc_packet_bytes);
  out.push_back(clip(packets / expected_packets, 0.0, 4.0));
  out.push_back(clip(static_cast<double>(backlog) / 50.0, 0.0, 4.0));
  out.push_back(static_cast<double>(num_embb_users) / 8.0);
  out.push_back(static_cast<double>(num_urllc_users) / 8.0);
  return out;
}

int AgentState::dim(const net::NetworkConfig& config) {
  return config.embb_users_per_ru + config.urllc_users_per_ru + 4;
}

int AllocationAction::punctured_count(int k) const {
  int count = 0;
  for (int m = 0; m < num_minislots; ++m)
    if (puncture_at(k, m) >= 0) ++count;
  return count;
}

int AllocationAction::punctured_count_by(int k, int urllc_user) const {
  int count = 0;
  for (int m = 0; m < num_minislots; ++m)
    if (puncture_at(k, m) == urllc_user) ++count;
  return count;
}

bool AllocationAction::rb_active(int k) const {
  return rb_user[k] >= 0 || punctured_count(k) > 0;
}

ActionLayout action_layout(const net::NetworkConfig& config) {
  ActionLayout layout;
  layout.num_rbs = config.num_rbs;
  layout.num_minislots = config.phy.minislots_per_tti;
  layout.user_choices = config.embb_users_per_ru + 1;
  layout.power_choices = config.num_power_levels;
  layout.puncture_choices = config.urllc_users_per_ru + 1;
  return layout;
}

std::vector<int> ActionLayout::head_sizes() const {
  std::vector<int> sizes;
  sizes.reserve(static_cast<std::size_t>(num_heads()));
  for (int k = 0; k < num_rbs; ++k) sizes.push_back(user_choices);
  for (int k = 0; k < num_rbs; ++k) sizes.push_back(power_choices);
  for (int c = 0; c < num_rbs * num_minislots; ++c) sizes.push_back(puncture_choices);
  return sizes;
}

double power_level_w(const net::NetworkConfig& config, int level) {
  const int levels = config.num_power_levels;
  const double fraction =
      levels == 1 ? 1.0 : static_cast<double>(level) / static_cast<double>(levels - 1);
  return fraction * config.rb_power_unit_w();
}

AllocationAction decode_action(std::span<const int> head_choices,
                               const net::NetworkConfig& config) {
  const ActionLayout layout = action_layout(config);
  if (static_cast<int>(head_choices.size()) != layout.num_heads())
    throw std::domain_error("decode_action: head choice count mismatch");
  AllocationAction action;
  action.num_rbs = layout.num_rbs;
  action.num_minislots = layout.num_minislots;
  action.rb_user.resize(layout.num_rbs);
  action.rb_power_level.resize(layout.num_rbs);
  action.rb_power_w.resize(layout.num_rbs);
  action.puncture.resize(static_cast<std::size_t>(layout.num_rbs) * layout.num_minislots);
  int h = 0;
  for (int k = 0; k < layout.num_rbs; ++k) action.rb_user[k] = head_choices[h++] - 1;
  for (int k = 0; k < layout.num_rbs; ++k) {
    action.rb_power_level[k] = head_choices[h++];
    action.rb_power_w[k] = power_level_w(config, action.rb_power_level[k]);
  }
  for (int c = 0; c < layout.num_rbs * layout.num_minislots; ++c)
    action.puncture[c] = head_choices[h++] - 1;
  return action;
}

DualState dual_update(const DualState& dual) {
  DualState next = dual;
  next.psi = std::max(dual.psi + dual.phi - dual.sigma_u, 0.0);
  return next;
}

AllocationAction repair_action(const AllocationAction& raw, const net::NetworkConfig& config) {
  const int num_rbs = config.num_rbs;
  const int m = config.phy.minislots_per_tti;
  if (raw.num_rbs != num_rbs || raw.num_minislots != m ||
      static_cast<int>(raw.rb_user.size()) != num_rbs ||
      static_cast<int>(raw.rb_power_level.size()) != num_rbs ||
      static_cast<int>(raw.puncture.size()) != num_rbs * m)
    throw std::domain_error("repair_action: action shape does not match config");

  AllocationAction out = raw;
  if (static_cast<int>(out.rb_power_w.size()) != num_rbs) {
    out.rb_power_w.resize(num_rbs);
    for (int k = 0; k < num_rbs; ++k)
      out.rb_power_w[k] = power_level_w(config, std::clamp(out.rb_power_level[k], 0,
                                                           config.num_power_levels - 1));
  }
  for (int k = 0; k < num_rbs; ++k) {
    if (out.rb_user[k] < -1 || out.rb_user[k] >= config.embb_users_per_ru) out.rb_user[k] = -1;
    out.rb_power_level[k] = std::clamp(out.rb_power_level[k], 0, config.num_power_levels - 1);
    if (!(out.rb_power_w[k] >= 0.0)) out.rb_power_w[k] = 0.0;
  }
  for (int& cell : out.puncture)
    if (cell < -1 || cell >= config.urllc_users_per_ru) cell = -1;

  double active_power = 0.0;
  for (int k = 0; k < num_rbs; ++k)
    if (out.rb_active(k)) active_power += out.rb_power_w[k];
  if (active_power > config.power.p_max_w) {
    const double scale = config.power.p_max_w / active_power;
    for (int k = 0; k < num_rbs; ++k) out.rb_power_w[k] *= scale;
  }
  return out;
}

ConstraintReport check_constraints(const AllocationAction& action,
                                   const net::NetworkConfig& config) {
  const int num_rbs = config.num_rbs;
  const int m = config.phy.minislots_per_tti;
  const int we = config.embb_users_per_ru;
  const int wu = config.urllc_users_per_ru;

  // Lower to the binary decision variables of the optimization problem.
  std::vector<int> alpha(static_cast<std::size_t>(we) * num_rbs, 0);
  std::vector<int> delta(static_cast<std::size_t>(wu) * num_rbs * m, 0);
  bool indices_valid = true;
  for (int k = 0; k < num_rbs; ++k) {
    const int w = action.rb_user[k];
    if (w >= 0) {
      if (w < we)
        alpha[static_cast<std::size_t>(w) * num_rbs + k] = 1;
      else
        indices_valid = false;
    } else if (w < -1) {
      indices_valid = false;
    }
  }
  for (int k = 0; k < num_rbs; ++k) {
    for (int slot = 0; slot < m; ++slot) {
      const int u = action.puncture_at(k, slot);
      if (u >= 0) {
        if (u < wu)
          delta[(static_cast<std::size_t>(u) * num_rbs + k) * m + slot] = 1;
        else
          indices_valid = false;
      } else if (u < -1) {
        indices_valid = false;
      }
    }
  }

  ConstraintReport report;
  report.alpha_binary = indices_valid;
  report.delta_binary = indices_valid;
  for (int v : alpha)
    if (v != 0 && v != 1) report.alpha_binary = false;
  for (int v : delta)
    if (v != 0 && v != 1) report.delta_binary = false;

  report.rb_single_user = true;
  for (int k = 0; k < num_rbs; ++k) {
    int sum = 0;
    for (int w = 0; w < we; ++w) sum += alpha[static_cast<std::size_t>(w) * num_rbs + k];
    if (sum > 1) report.rb_single_user = false;
  }

  report.cell_single_urllc = true;
  for (int k = 0; k < num_rbs; ++k) {
    for (int slot = 0; slot < m; ++slot) {
      int sum = 0;
      for (int u = 0; u < wu; ++u)
        sum += delta[(static_cast<std::size_t>(u) * num_rbs + k) * m + slot];
      if (sum > 1) report.cell_single_urllc = false;
    }
  }

  report.puncture_within_m = true;
  for (int k = 0; k < num_rbs; ++k) {
    int punctured = 0;
    for (int u = 0; u < wu; ++u)
      for (int slot = 0; slot < m; ++slot)
        punctured += delta[(static_cast<std::size_t>(u) * num_rbs + k) * m + slot];
    if (punctured > m) report.puncture_within_m = false;
  }

  report.power_nonneg = true;
  double total_power = 0.0;
  for (int k = 0; k < num_rbs; ++k) {
    const double p = action.rb_power_w[k];
    if (!(p >= 0.0)) report.power_nonneg = false;
    bool transmits = action.rb_user[k] >= 0;
    for (int slot = 0; slot < m && !transmits; ++slot)
      if (action.puncture_at(k, slot) >= 0) transmits = true;
    if (transmits) total_power += p;
  }
  // boundary inclusive, with headroom only for rescaling round-off
  report.power_budget = total_power <= config.power.p_max_w * (1.0 + 1e-12);
  return report;
}

EpisodeConstraintReport check_episode_constraints(double outage_frequency,
                                                  double mean_embb_rate_per_ru_bps,
                                                  const net::NetworkConfig& config) {
  EpisodeConstraintReport report;
  report.urllc_reliability = outage_frequency <= config.urllc_outage_target;
  report.embb_reliability = mean_embb_rate_per_ru_bps >= config.embb_min_rate_bps;
  return report;
}

double measure_outage(std::span<const bool> delivered_window) {
  if (delivered_window.empty()) return 0.0;
  std::size_t failed = 0;
  for (bool delivered : delivered_window)
    if (!delivered) ++failed;
  return static_cast<double>(failed) / static_cast<double>(delivered_window.size());
}

NetworkEvaluation evaluate_network(const net::NetworkConfig& config,
                                   const net::ChannelRealization& realization,
                                   std::span<const AllocationAction> per_ru_actions) {
  const int num_rus = config.num_rus();
  const int num_rbs = config.num_rbs;
  const int we = config.embb_users_per_ru;
  const int wu = config.urllc_users_per_ru;
  const int symbols = config.phy.symbols_per_block();
  if (static_cast<int>(per_ru_actions.size()) != num_rus)
    throw std::domain_error("evaluate_network: need one action per RU");

  // effective transmit power per (ru, rb); zero when the RB carries nothing
  std::vector<double> power(static_cast<std::size_t>(num_rus) * num_rbs, 0.0);
  std::vector<char> embb_on(power.size(), 0);
  std::vector<char> urllc_on(power.size(), 0);
  for (int ru = 0; ru < num_rus; ++ru) {
    const AllocationAction& a = per_ru_actions[ru];
    for (int k = 0; k < num_rbs; ++k) {
      const bool assigned = a.rb_user[k] >= 0;
      const bool punctured = a.punctured_count(k) > 0;
      const std::size_t idx = static_cast<std::size_t>(ru) * num_rbs + k;
      embb_on[idx] = assigned;
      urllc_on[idx] = punctured;
      if (assigned || punctured) power[idx] = a.rb_power_w[k];
    }
  }

  NetworkEvaluation out;
  out.per_ru.resize(num_rus);

  std::vector<phy::LinkGain> same_service;
  std::vector<phy::LinkGain> cross_service;
  for (int ru = 0; ru < num_rus; ++ru) {
    const AllocationAction& a = per_ru_actions[ru];
    RuEvaluation& ev = out.per_ru[ru];
    ev.embb_rb_rates.assign(num_rbs, 0.0);
    ev.embb_user_rates.assign(we, 0.0);
    ev.urllc_user_rates.assign(wu, 0.0);

    for (int k = 0; k < num_rbs; ++k) {
      const int w = a.rb_user[k];
      if (w < 0) continue;
      const int user = ru * we + w;
      const std::size_t own = static_cast<std::size_t>(ru) * num_rbs + k;
      same_service.clear();
      cross_service.clear();
      for (int other = 0; other < num_rus; ++other) {
        if (other == ru) continue;
        const std::size_t idx = static_cast<std::size_t>(other) * num_rbs + k;
        if (power[idx] <= 0.0) continue;
        const phy::LinkGain g{power[idx], realization.embb_gain.at(other, user, k)};
        if (embb_on[idx])
          same_service.push_back(g);
        else
          cross_service.push_back(g);
      }
      const double omega =
          phy::sinr(phy::LinkGain{power[own], realization.embb_gain.at(ru, user, k)},
                    same_service, cross_service, config.phy.noise_power_w);
      const double rate = phy::embb_rb_rate(omega, a.punctured_count(k), config.phy);
      ev.embb_rb_rates[k] = rate;
      ev.embb_user_rates[w] += rate;
    }

    double weighted_sinr = 0.0;
    double weight = 0.0;
    for (int u = 0; u < wu; ++u) {
      const int user = ru * wu + u;
      double user_rate = 0.0;
      for (int k = 0; k < num_rbs; ++k) {
        const int punctured = a.punctured_count_by(k, u);
        if (punctured == 0) continue;
        const std::size_t own = static_cast<std::size_t>(ru) * num_rbs + k;
        same_service.clear();
        cross_service.clear();
        for (int other = 0; other < num_rus; ++other) {
          if (other == ru) continue;
          const std::size_t idx = static_cast<std::size_t>(other) * num_rbs + k;
          if (power[idx] <= 0.0) continue;
          const phy::LinkGain g{power[idx], realization.urllc_gain.at(other, user, k)};
          if (urllc_on[idx])
            same_service.push_back(g);
          else
            cross_service.push_back(g);
        }
        const double omega =
            phy::sinr(phy::LinkGain{power[own], realization.urllc_gain.at(ru, user, k)},
                      same_service, cross_service, config.phy.noise_power_w);
        user_rate += phy::urllc_rb_rate(omega, punctured, symbols, config.phy);
        weighted_sinr += static_cast<double>(punctured) * omega;
        weight += static_cast<double>(punctured);
      }
      ev.urllc_user_rates[u] = user_rate;
      ev.urllc_rate_total += user_rate;
    }
    ev.urllc_mean_sinr = weight > 0.0 ? weighted_sinr / weight : 0.0;

    for (double r : ev.embb_user_rates) ev.embb_rate_total += r;
    for (int k = 0; k < num_rbs; ++k)
      ev.tx_power_w += power[static_cast<std::size_t>(ru) * num_rbs + k];
  }

  const int num_dus = config.num_dus;
  out.du_sum_rate_bps.assign(num_dus, 0.0);
  out.du_tx_power_w.assign(num_dus, 0.0);
  out.du_total_power_w.assign(num_dus, 0.0);
  out.du_ee.assign(num_dus, 0.0);
  for (int ru = 0; ru < num_rus; ++ru) {
    const int du = ru / config.rus_per_du;
    out.du_sum_rate_bps[du] += out.per_ru[ru].embb_rate_total + out.per_ru[ru].urllc_rate_total;
    out.du_tx_power_w[du] += out.per_ru[ru].tx_power_w;
  }
  for (int du = 0; du < num_dus; ++du) {
    const std::vector<double> tx{out.du_tx_power_w[du]};
    out.du_total_power_w[du] = energy::total_power(tx, config.rus_per_du, config.power);
    out.du_ee[du] = energy::energy_efficiency(out.du_sum_rate_bps[du], out.du_total_power_w[du]);
    out.network_sum_rate_bps += out.du_sum_rate_bps[du];
    out.network_total_power_w += out.du_total_power_w[du];
  }
  out.network_ee = energy::energy_efficiency(out.network_sum_rate_bps, out.network_total_power_w);
  return out;
}

AgentState encode_state(const net::ChannelRealization& realization,
                        const net::UrllcTraffic& traffic, int ru, int backlog,
                        const net::NetworkConfig& config) {
  AgentState state;
  state.num_embb_users = config.embb_users_per_ru;
  state.num_urllc_users = config.urllc_users_per_ru;
  state.backlog = backlog;
  state.traffic_load = static_cast<double>(traffic.total) * config.urllc_packet_bytes;

  auto summarize = [&](const net::GainTensor& g, int users_per_ru, std::vector<double>& out) {
    out.resize(users_per_ru);
    for (int u = 0; u < users_per_ru; ++u) {
      const int user = ru * users_per_ru + u;
      double mean = 0.0;
      for (int k = 0; k < config.num_rbs; ++k) mean += g.at(ru, user, k);
      mean /= static_cast<double>(config.num_rbs);
      const double db = 10.0 * std::log10(std::max(mean, 1e-300));
      const double clipped = clip(db, kGainClipLoDb, kGainClipHiDb);
      out[u] = (clipped - 0.5 * (kGainClipLoDb + kGainClipHiDb)) /
               (0.5 * (kGainClipHiDb - kGainClipLoDb));
    }
  };
  summarize(realization.embb_gain, config.embb_users_per_ru, state.embb_gain_summary);
  summarize(realization.urllc_gain, config.urllc_users_per_ru, state.urllc_gain_summary);
  return state;
}

Environment::Environment(const net::NetworkConfig& config, std::uint64_t seed,
                         std::uint64_t instance_id)
    : seed_(seed), instance_id_(instance_id) {
  net::NetworkConfig cfg = config;
  cfg.rng_seed = seed;
  state_ = net::build_network(cfg);
  queues_.resize(static_cast<std::size_t>(state_.config.num_rus()));
  for (RuQueue& q : queues_) {
    q.harq.max_retx = state_.config.harq_max_retx;
    q.harq.rtt_ttis = state_.config.harq_rtt_ttis;
  }
  current_traffic_.resize(queues_.size());
  duals_.resize(static_cast<std::size_t>(state_.config.num_dus));
  outcome_windows_.resize(duals_.size());
  reset();
}

void Environment::reset() {
  for (RuQueue& q : queues_) {
    q.queue.clear();
    q.harq.pending.clear();
    q.harq.outage_count = 0;
  }
  for (DualState& d : duals_) {
    d = DualState{};
    d.sigma_u = state_.config.urllc_outage_target;
  }
  for (auto& w : outcome_windows_) w.clear();
  tti_in_episode_ = 0;
  prepared_ = false;
  total_arrived_ = total_served_ = total_dropped_ = 0;
}

void Environment::prepare_tti() {
  if (prepared_) return;
  const std::uint64_t channel_seed = mix64(seed_ ^ mix64(instance_id_ ^ kStreamChannel));
  if (state_.config.pinned_channel) {
    if (!pinned_ready_) {
      pinned_ = net::sample_channels(state_, 0, channel_seed);
      pinned_ready_ = true;
    }
    current_ = pinned_;
    current_.tti_index = tti_;
  } else {
    current_ = net::sample_channels(state_, tti_, channel_seed);
  }
  for (int ru = 0; ru < num_rus(); ++ru) {
    Rng rng = Rng::stream(seed_, {instance_id_, kStreamArrival,
                                  static_cast<std::uint64_t>(tti_),
                                  static_cast<std::uint64_t>(ru)});
    current_traffic_[ru] = net::sample_urllc_arrivals(
        state_.config.urllc_arrival_rate, state_.config.phy.minislots_per_tti, rng);
    current_traffic_[ru].backlog = static_cast<int>(queues_[ru].queue.size() +
                                                    queues_[ru].harq.pending.size());
  }
  prepared_ = true;
}

const net::ChannelRealization& Environment::realization() const {
  if (!prepared_) throw std::logic_error("Environment: realization() before prepare_tti()");
  return current_;
}

const net::UrllcTraffic& Environment::traffic(int ru) const {
  if (!prepared_) throw std::logic_error("Environment: traffic() before prepare_tti()");
  return current_traffic_[ru];
}

AgentState Environment::observe(int ru) const {
  if (!prepared_) throw std::logic_error("Environment: observe() before prepare_tti()");
  return encode_state(current_, current_traffic_[ru], ru, current_traffic_[ru].backlog,
                      state_.config);
}

std::vector<StepOutcome> Environment::step(std::span<const AllocationAction> per_ru_actions) {
  if (!prepared_) throw std::logic_error("Environment: step() before prepare_tti()");
  const net::NetworkConfig& cfg = state_.config;
  if (static_cast<int>(per_ru_actions.size()) != num_rus())
    throw std::domain_error("Environment::step: one action per RU required");

  std::vector<AllocationAction> repaired;
  repaired.reserve(per_ru_actions.size());
  for (const AllocationAction& a : per_ru_actions) repaired.push_back(repair_action(a, cfg));

  const NetworkEvaluation eval = evaluate_network(cfg, current_, repaired);

  const int packet_bits = cfg.urllc_packet_bits();
  std::vector<StepOutcome> outcomes(static_cast<std::size_t>(cfg.num_dus));
  for (int du = 0; du < cfg.num_dus; ++du) {
    outcomes[du].constraints = ConstraintReport{true, true, true, true, true, true, true};
    outcomes[du].psi = duals_[du].psi;
  }

  for (int ru = 0; ru < num_rus(); ++ru) {
    const int du = du_of_ru(ru);
    StepOutcome& oc = outcomes[du];
    RuQueue& rq = queues_[ru];

    const ConstraintReport report = check_constraints(repaired[ru], cfg);
    oc.constraints.rb_single_user &= report.rb_single_user;
    oc.constraints.cell_single_urllc &= report.cell_single_urllc;
    oc.constraints.puncture_within_m &= report.puncture_within_m;
    oc.constraints.power_budget &= report.power_budget;
    oc.constraints.power_nonneg &= report.power_nonneg;
    oc.constraints.alpha_binary &= report.alpha_binary;
    oc.constraints.delta_binary &= report.delta_binary;

    // HARQ retransmissions due now re-enter the head of the queue.
    net::HarqStepResult due = net::harq_step(rq.harq, tti_, {}, {});
    for (auto it = due.due_now.rbegin(); it != due.due_now.rend(); ++it)
      rq.queue.push_front(Packet{it->packet_id, tti_, tti_ + cfg.harq_rtt_ttis,
                                 it->retx_count});

    // New arrivals join the tail.
    const int arrivals = current_traffic_[ru].total;
    oc.packets_arrived += arrivals;
    total_arrived_ += arrivals;
    const int deadline = tti_ + (1 + cfg.harq_max_retx) * cfg.harq_rtt_ttis;
    for (int i = 0; i < arrivals; ++i)
      rq.queue.push_back(Packet{next_packet_id_++, tti_, deadline, 0});

    // Expire packets that can no longer meet the latency budget.
    std::deque<Packet> remaining;
    for (const Packet& p : rq.queue) {
      if (tti_ > p.deadline_tti) {
        oc.packets_dropped += 1;
        total_dropped_ += 1;
        outcome_windows_[du].emplace_back(tti_, false);
      } else {
        remaining.push_back(p);
      }
    }
    rq.queue = std::move(remaining);

    // Serve FIFO from the punctured capacity of this TTI.
    double budget_bits =
        eval.per_ru[ru].urllc_rate_total * cfg.phy.tti_duration_s;
    std::vector<net::HarqOutcome> harq_outcomes;
    std::vector<int> harq_retx;
    while (!rq.queue.empty() && budget_bits >= static_cast<double>(packet_bits)) {
      const Packet p = rq.queue.front();
      rq.queue.pop_front();
      budget_bits -= static_cast<double>(packet_bits);
      Rng rng = Rng::stream(seed_, {instance_id_, kStreamHarq,
                                    static_cast<std::uint64_t>(tti_),
                                    static_cast<std::uint64_t>(p.id)});
      const double p_succ =
          net::harq_success_probability(eval.per_ru[ru].urllc_mean_sinr, packet_bits);
      const bool success = rng.uniform() < p_succ;
      if (success) {
        oc.packets_served += 1;
        total_served_ += 1;
        outcome_windows_[du].emplace_back(tti_, true);
      } else {
        harq_outcomes.push_back(net::HarqOutcome{p.id, false});
        harq_retx.push_back(p.retx_count);
      }
    }
    const net::HarqStepResult booked = net::harq_step(rq.harq, tti_, harq_outcomes, harq_retx);
    for (std::size_t i = 0; i < booked.outage_packets.size(); ++i) {
      oc.packets_dropped += 1;
      total_dropped_ += 1;
      outcome_windows_[du].emplace_back(tti_, false);
    }

    const double demand_bits = static_cast<double>(arrivals) * packet_bits;
    const double served_capacity_bits =
        eval.per_ru[ru].urllc_rate_total * cfg.phy.tti_duration_s;
    oc.urllc_deficit_bits += std::max(0.0, demand_bits - served_capacity_bits);

    double ru_embb_rate = 0.0;
    for (double r : eval.per_ru[ru].embb_user_rates) {
      oc.embb_rates.push_back(r);
      ru_embb_rate += r;
    }
    oc.embb_shortfall +=
        std::max(0.0, cfg.embb_min_rate_bps - ru_embb_rate) / cfg.embb_min_rate_bps;
    oc.embb_rate_bps += ru_embb_rate;
    oc.urllc_rate_bps += eval.per_ru[ru].urllc_rate_total;
  }

  for (int du = 0; du < cfg.num_dus; ++du) {
    StepOutcome& oc = outcomes[du];
    oc.ee = eval.du_ee[du];
    oc.sum_rate_bps = eval.du_sum_rate_bps[du];
    oc.outage_flag = oc.packets_dropped > 0;

    // Trim the outage window, then measure Phi on resolved packets.
    auto& window = outcome_windows_[du];
    while (!window.empty() && window.front().first <= tti_ - cfg.outage_window_ttis)
      window.pop_front();
    std::vector<bool> delivered;
    delivered.reserve(window.size());
    for (const auto& [t, ok] : window) delivered.push_back(ok);
    oc.phi = measure_outage(delivered);

    if (cfg.embb_reward_term == net::EmbbRewardTerm::shortfall_penalty) {
      oc.reward = oc.ee / cfg.ee_scale - oc.psi * oc.urllc_deficit_bits -
                  cfg.kappa_e * oc.embb_shortfall;
    } else {
      const double served_bits = oc.urllc_rate_bps * cfg.phy.tti_duration_s;
      double demand_bits = 0.0;
      for (int ru = du * cfg.rus_per_du; ru < (du + 1) * cfg.rus_per_du; ++ru)
        demand_bits += static_cast<double>(current_traffic_[ru].total) * packet_bits;
      oc.reward = oc.ee / cfg.ee_scale - oc.psi * (served_bits - demand_bits) -
                  oc.embb_rate_bps * cfg.phy.tti_duration_s;
    }

    DualState d = duals_[du];
    d.phi = oc.phi;
    duals_[du] = dual_update(d);
    duals_[du].phi = oc.phi;
  }

  prepared_ = false;
  tti_ += 1;
  tti_in_episode_ += 1;
  return outcomes;
}

long Environment::in_flight() const {
  long count = 0;
  for (const RuQueue& q : queues_)
    count += static_cast<long>(q.queue.size() + q.harq.pending.size());
  return count;
}

void write_episode_trace_header(std::string& out) {
  out += "tti,agent,reward,ee_bit_per_joule,sum_rate_bps,urllc_outage,psi,phi\n";
}

}  // namespace oran::env
