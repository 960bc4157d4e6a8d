#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "oran/net.hpp"

using namespace oran;

namespace {
net::NetworkConfig small_config() {
  net::NetworkConfig cfg;
  cfg.num_dus = 2;
  cfg.rus_per_du = 1;
  cfg.embb_users_per_ru = 2;
  cfg.urllc_users_per_ru = 2;
  cfg.num_rbs = 8;
  cfg.rng_seed = 7;
  return cfg;
}
}  // namespace

TEST_CASE("build_network places the configured topology") {
  net::NetworkConfig cfg;
  cfg.num_dus = 4;
  cfg.rus_per_du = 2;
  const net::NetworkState state = net::build_network(cfg);
  CHECK(static_cast<int>(state.ru_xy.size()) == 8);
  CHECK(static_cast<int>(state.embb_user_xy.size()) == 8 * cfg.embb_users_per_ru);

  // users stay inside their RU's disc
  net::NetworkConfig one = small_config();
  one.num_dus = 1;
  one.embb_users_per_ru = 1;
  one.urllc_users_per_ru = 1;
  const net::NetworkState s1 = net::build_network(one);
  const double dx = s1.embb_user_xy[0].x - s1.ru_xy[0].x;
  const double dy = s1.embb_user_xy[0].y - s1.ru_xy[0].y;
  CHECK(std::sqrt(dx * dx + dy * dy) <= one.cell_radius_m + 1e-9);

  // determinism under the seed
  const net::NetworkState a = net::build_network(small_config());
  const net::NetworkState b = net::build_network(small_config());
  REQUIRE(a.embb_user_xy.size() == b.embb_user_xy.size());
  for (std::size_t i = 0; i < a.embb_user_xy.size(); ++i) {
    CHECK(a.embb_user_xy[i].x == b.embb_user_xy[i].x);
    CHECK(a.embb_user_xy[i].y == b.embb_user_xy[i].y);
  }
  CHECK(a.embb_attenuation_db == b.embb_attenuation_db);

  net::NetworkConfig bad = small_config();
  bad.num_dus = 0;
  CHECK_THROWS_AS(net::build_network(bad), std::domain_error);
}

TEST_CASE("sample_channels is deterministic and respects zero fading") {
  const net::NetworkState state = net::build_network(small_config());
  const net::ChannelRealization a = net::sample_channels(state, 3);
  const net::ChannelRealization b = net::sample_channels(state, 3);
  CHECK(a.embb_gain.data == b.embb_gain.data);
  CHECK(a.urllc_gain.data == b.urllc_gain.data);

  const net::ChannelRealization c = net::sample_channels(state, 4);
  CHECK(a.embb_gain.data != c.embb_gain.data);

  for (double g : a.embb_gain.data) CHECK(g >= 0.0);
  CHECK(a.embb_gain.num_rus == 2);
  CHECK(a.embb_gain.num_users == 4);
  CHECK(a.embb_gain.num_rbs == 8);
}

TEST_CASE("fading draws have unit mean") {
  // isolate fading by fixing attenuation at 0 dB
  net::NetworkConfig cfg = small_config();
  net::NetworkState state = net::build_network(cfg);
  for (double& a : state.embb_attenuation_db) a = 0.0;
  double sum = 0.0;
  long count = 0;
  for (int tti = 0; tti < 200; ++tti) {
    const net::ChannelRealization r = net::sample_channels(state, tti);
    for (double g : r.embb_gain.data) {
      sum += g;
      count += 1;
    }
  }
  CHECK(count >= 100000);
  CHECK(sum / static_cast<double>(count) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("urllc arrivals are Poisson per mini-slot") {
  Rng rng(11);
  const net::UrllcTraffic zero = net::sample_urllc_arrivals(0.0, 7, rng);
  CHECK(zero.total == 0);
  for (int a : zero.arrivals_per_minislot) CHECK(a == 0);

  long total = 0;
  for (int i = 0; i < 100000; ++i) {
    const net::UrllcTraffic t = net::sample_urllc_arrivals(2.0, 7, rng);
    int sum = 0;
    for (int a : t.arrivals_per_minislot) sum += a;
    REQUIRE(t.total == sum);
    total += t.total;
  }
  CHECK(static_cast<double>(total) / 100000.0 == doctest::Approx(14.0).epsilon(0.005));

  CHECK_THROWS_AS(net::sample_urllc_arrivals(-1.0, 7, rng), std::domain_error);
}

TEST_CASE("harq success probability") {
  CHECK(net::harq_success_probability(1e9, 256) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(net::harq_success_probability(0.0, 256) ==
        doctest::Approx(std::pow(0.5, 256)).epsilon(1e-9));
  // frozen from high-precision erfc: (1 - Q(sqrt(8)))^256
  CHECK(net::harq_success_probability(4.0, 256) ==
        doctest::Approx(0.54911281333087127).epsilon(1e-12));
  CHECK_THROWS_AS(net::harq_success_probability(1.0, 0), std::domain_error);
}

TEST_CASE("harq_step timing and bounded retransmissions") {
  net::HarqProcess process;
  process.max_retx = 1;
  process.rtt_ttis = 1;

  // failure at t=5 schedules the retransmission at t=6
  const std::vector<net::HarqOutcome> fail{{42, false}};
  const std::vector<int> fresh{0};
  net::HarqStepResult r5 = net::harq_step(process, 5, fail, fresh);
  CHECK(r5.due_now.empty());
  CHECK(r5.outage_packets.empty());
  REQUIRE(process.pending.size() == 1);
  CHECK(process.pending[0].retransmit_at_tti == 6);
  CHECK(process.pending[0].retransmit_at_tti - 5 == process.rtt_ttis);
  CHECK(process.pending[0].retx_count == 1);

  // nothing due at t=5.5 equivalents; due exactly at t=6
  net::HarqStepResult r6 = net::harq_step(process, 6, {}, {});
  REQUIRE(r6.due_now.size() == 1);
  CHECK(r6.due_now[0].packet_id == 42);
  CHECK(process.pending.empty());

  // all successes leave the process untouched
  const std::vector<net::HarqOutcome> ok{{43, true}, {44, true}};
  const std::vector<int> counts{0, 0};
  net::HarqStepResult r7 = net::harq_step(process, 7, ok, counts);
  CHECK(r7.due_now.empty());
  CHECK(process.pending.empty());
  CHECK(process.outage_count == 0);

  // failure at max_retx drops the packet as outage
  const std::vector<net::HarqOutcome> fail2{{42, false}};
  const std::vector<int> exhausted{1};
  net::HarqStepResult r8 = net::harq_step(process, 8, fail2, exhausted);
  CHECK(process.pending.empty());
  REQUIRE(r8.outage_packets.size() == 1);
  CHECK(r8.outage_packets[0] == 42);
  CHECK(process.outage_count == 1);
}

TEST_CASE("config invariants") {
  net::NetworkConfig cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.urllc_packet_bits() == 256);

  net::NetworkConfig wide = cfg;
  wide.num_rbs = 200;  // 200 * 180 kHz > 20 MHz
  CHECK_THROWS_AS(wide.validate(), std::domain_error);

  net::NetworkConfig bad = cfg;
  bad.urllc_outage_target = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
}
