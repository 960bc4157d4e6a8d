#include "oran/net.hpp"

#include <cmath>
#include <stdexcept>

#include "oran/parallel.hpp"

namespace oran::net {

namespace {
constexpr std::uint64_t kStreamTopology = 0x746f706fULL;
constexpr std::uint64_t kStreamShadowing = 0x73686164ULL;
constexpr std::uint64_t kStreamFadingEmbb = 0x66616445ULL;
constexpr std::uint64_t kStreamFadingUrllc = 0x66616455ULL;

double link_distance_km(const Position& a, const Position& b, double min_distance_m) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  double d = std::sqrt(dx * dx + dy * dy);
  if (d < min_distance_m) d = min_distance_m;
  return d / 1000.0;
}
}  // namespace

void NetworkConfig::validate() const {
  if (num_dus < 1) throw std::domain_error("config: num_dus must be >= 1");
  if (rus_per_du < 1) throw std::domain_error("config: rus_per_du must be >= 1");
  if (embb_users_per_ru < 1) throw std::domain_error("config: embb_users_per_ru must be >= 1");
  if (urllc_users_per_ru < 1) throw std::domain_error("config: urllc_users_per_ru must be >= 1");
  if (num_rbs < 1) throw std::domain_error("config: num_rbs must be >= 1");
  if (!(cell_radius_m > 0.0)) throw std::domain_error("config: cell_radius_m must be > 0");
  if (!(min_link_distance_m > 0.0))
    throw std::domain_error("config: min_link_distance_m must be > 0");
  if (shadowing_sigma_db < 0.0)
    throw std::domain_error("config: shadowing_sigma_db must be >= 0");
  if (urllc_arrival_rate < 0.0)
    throw std::domain_error("config: urllc_arrival_rate must be >= 0");
  if (urllc_packet_bytes < 1) throw std::domain_error("config: urllc_packet_bytes must be >= 1");
  if (harq_rtt_ttis < 1) throw std::domain_error("config: harq_rtt_ttis must be >= 1");
  if (harq_max_retx < 0) throw std::domain_error("config: harq_max_retx must be >= 0");
  if (!(urllc_outage_target > 0.0 && urllc_outage_target < 1.0))
    throw std::domain_error("config: urllc_outage_target must be in (0, 1)");
  if (!(embb_min_rate_bps > 0.0)) throw std::domain_error("config: embb_min_rate_bps must be > 0");
  if (num_power_levels < 1) throw std::domain_error("config: num_power_levels must be >= 1");
  if (!(ee_scale > 0.0)) throw std::domain_error("config: ee_scale must be > 0");
  if (kappa_e < 0.0) throw std::domain_error("config: kappa_e must be >= 0");
  if (outage_window_ttis < 1) throw std::domain_error("config: outage_window_ttis must be >= 1");
  if (episode_ttis < 1) throw std::domain_error("config: episode_ttis must be >= 1");
  if (static_cast<double>(num_rbs) * phy.rb_bandwidth_hz > system_bandwidth_hz)
    throw std::domain_error("config: num_rbs * rb_bandwidth_hz exceeds system_bandwidth_hz");
  phy.validate();
  power.validate();
}

NetworkState build_network(const NetworkConfig& config) {
  config.validate();
  NetworkState state;
  state.config = config;

  const int num_rus = config.num_rus();
  const double spacing = 2.0 * config.cell_radius_m;
  int cols = 1;
  while (cols * cols < num_rus) ++cols;

  state.ru_xy.resize(num_rus);
  for (int ru = 0; ru < num_rus; ++ru) {
    state.ru_xy[ru].x = static_cast<double>(ru % cols) * spacing;
    state.ru_xy[ru].y = static_cast<double>(ru / cols) * spacing;
  }

  auto place_users = [&](int users_per_ru, std::uint64_t service_tag) {
    std::vector<Position> xy(static_cast<std::size_t>(num_rus) * users_per_ru);
    for (int ru = 0; ru < num_rus; ++ru) {
      for (int u = 0; u < users_per_ru; ++u) {
        Rng rng = Rng::stream(config.rng_seed,
                              {kStreamTopology, service_tag,
                               static_cast<std::uint64_t>(ru), static_cast<std::uint64_t>(u)});
        const double r = config.cell_radius_m * std::sqrt(rng.uniform());
        const double theta = rng.uniform(0.0, 6.283185307179586);
        Position& p = xy[static_cast<std::size_t>(ru) * users_per_ru + u];
        p.x = state.ru_xy[ru].x + r * std::cos(theta);
        p.y = state.ru_xy[ru].y + r * std::sin(theta);
      }
    }
    return xy;
  };
  state.embb_user_xy = place_users(config.embb_users_per_ru, 0xE);
  state.urllc_user_xy = place_users(config.urllc_users_per_ru, 0xF);

  auto attenuation = [&](const std::vector<Position>& users, std::uint64_t service_tag) {
    std::vector<double> att(static_cast<std::size_t>(num_rus) * users.size());
    for (int ru = 0; ru < num_rus; ++ru) {
      for (std::size_t u = 0; u < users.size(); ++u) {
        Rng rng = Rng::stream(config.rng_seed,
                              {kStreamShadowing, service_tag,
                               static_cast<std::uint64_t>(ru), static_cast<std::uint64_t>(u)});
        const double shadow_db = config.shadowing_sigma_db * rng.normal();
        const double d_km =
            link_distance_km(state.ru_xy[ru], users[u], config.min_link_distance_m);
        att[static_cast<std::size_t>(ru) * users.size() + u] =
            phy::pathloss_db(d_km, config.pathloss_fixed_db, config.pathloss_slope_db) +
            shadow_db;
      }
    }
    return att;
  };
  state.embb_attenuation_db = attenuation(state.embb_user_xy, 0xE);
  state.urllc_attenuation_db = attenuation(state.urllc_user_xy, 0xF);
  return state;
}

ChannelRealization sample_channels(const NetworkState& state, int tti) {
  return sample_channels(state, tti, state.config.rng_seed);
}

ChannelRealization sample_channels(const NetworkState& state, int tti, std::uint64_t seed) {
  const NetworkConfig& cfg = state.config;
  const int num_rus = cfg.num_rus();
  ChannelRealization out;
  out.tti_index = tti;
  out.embb_gain = GainTensor(num_rus, cfg.num_embb_users(), cfg.num_rbs);
  out.urllc_gain = GainTensor(num_rus, cfg.num_urllc_users(), cfg.num_rbs);

  auto fill = [&](GainTensor& g, const std::vector<double>& attenuation_db,
                  std::uint64_t stream_tag) {
    const int entries = g.num_rus * g.num_users * g.num_rbs;
#pragma omp parallel for schedule(static) num_threads(parallel::max_threads()) \
    if (parallel::enabled())
    for (int idx = 0; idx < entries; ++idx) {
      const int rb = idx % g.num_rbs;
      const int user = (idx / g.num_rbs) % g.num_users;
      const int ru = idx / (g.num_rbs * g.num_users);
      Rng rng = Rng::stream(seed, {stream_tag, static_cast<std::uint64_t>(tti),
                                   static_cast<std::uint64_t>(ru),
                                   static_cast<std::uint64_t>(user),
                                   static_cast<std::uint64_t>(rb)});
      const double fading = rng.exponential();
      g.data[idx] = phy::channel_gain(
          attenuation_db[static_cast<std::size_t>(ru) * g.num_users + user], fading, 0.0);
    }
  };
  fill(out.embb_gain, state.embb_attenuation_db, kStreamFadingEmbb);
  fill(out.urllc_gain, state.urllc_attenuation_db, kStreamFadingUrllc);
  return out;
}

UrllcTraffic sample_urllc_arrivals(double rate, int m_slots, Rng& rng) {
  if (rate < 0.0) throw std::domain_error("sample_urllc_arrivals: rate must be >= 0");
  UrllcTraffic traffic;
  traffic.arrivals_per_minislot.resize(m_slots, 0);
  for (int m = 0; m < m_slots; ++m) {
    traffic.arrivals_per_minislot[m] = rng.poisson(rate);
    traffic.total += traffic.arrivals_per_minislot[m];
  }
  return traffic;
}

double harq_success_probability(double sinr_value, int tb_bits) {
  if (tb_bits < 1) throw std::domain_error("harq_success_probability: tb_bits must be >= 1");
  const double ber = 0.5 * std::erfc(std::sqrt(sinr_value));  // Q(sqrt(2*Omega))
  return std::pow(1.0 - ber, static_cast<double>(tb_bits));
}

HarqStepResult harq_step(HarqProcess& process, int tti, std::span<const HarqOutcome> outcomes,
                         std::span<const int> outcome_retx_counts) {
  if (outcomes.size() != outcome_retx_counts.size())
    throw std::domain_error("harq_step: outcomes/retx count length mismatch");
  HarqStepResult result;

  std::vector<HarqEntry> still_pending;
  still_pending.reserve(process.pending.size());
  for (const HarqEntry& e : process.pending) {
    if (e.retransmit_at_tti == tti)
      result.due_now.push_back(e);
    else
      still_pending.push_back(e);
  }
  process.pending = std::move(still_pending);

  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].success) continue;
    if (outcome_retx_counts[i] < process.max_retx) {
      process.pending.push_back(HarqEntry{outcomes[i].packet_id, tti + process.rtt_ttis,
                                          outcome_retx_counts[i] + 1});
    } else {
      process.outage_count += 1;
      result.outage_packets.push_back(outcomes[i].packet_id);
    }
  }
  return result;
}

}  // namespace oran::net
