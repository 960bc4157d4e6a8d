#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "oran/phy.hpp"
#include "oran/rng.hpp"

using namespace oran;

namespace {

// Independent inversion oracle: bisection on Q(z) = erfc(z/sqrt(2))/2.
double bisect_q_inv(double x) {
  double lo = -42.0, hi = 42.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(mid / std::sqrt(2.0)) > x)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double gaussian_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

phy::PhyConstants default_phy() { return phy::PhyConstants{}; }

}  // namespace

TEST_CASE("pathloss model") {
  CHECK(phy::pathloss_db(1.0) == doctest::Approx(120.8).epsilon(1e-12));
  CHECK(phy::pathloss_db(0.1) == doctest::Approx(83.3).epsilon(1e-12));
  CHECK(phy::pathloss_db(0.25) == doctest::Approx(98.222750325201410).epsilon(1e-12));
  CHECK_THROWS_AS(phy::pathloss_db(0.0), std::domain_error);
  CHECK_THROWS_AS(phy::pathloss_db(-1.0), std::domain_error);
}

TEST_CASE("channel gain composition") {
  CHECK(phy::channel_gain(83.3, 1.0, 0.0) ==
        doctest::Approx(4.6773514128719819e-9).epsilon(1e-12));
  CHECK(phy::channel_gain(57.0, 0.0, 12.0) == 0.0);
  CHECK(phy::channel_gain(0.0, 1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(phy::channel_gain(80.0, -0.5, 0.0), std::domain_error);
}

TEST_CASE("sinr") {
  const phy::LinkGain sig{1.0, 1e-10};
  CHECK(phy::sinr(sig, {}, {}, 1e-10) == doctest::Approx(1.0).epsilon(1e-15));

  const std::vector<phy::LinkGain> one{{1.0, 1e-10}};
  CHECK(phy::sinr(sig, one, {}, 1e-10) == doctest::Approx(0.5).epsilon(1e-15));

  const phy::LinkGain sig2{1.0, 2e-10};
  const std::vector<phy::LinkGain> embb{{1.0, 1e-10}};
  const std::vector<phy::LinkGain> urllc{{0.5, 1e-10}};
  CHECK(phy::sinr(sig2, embb, urllc, 0.5e-10) == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(phy::sinr(sig, {}, {}, 0.0), std::domain_error);
}

TEST_CASE("sinr interference lists enter symmetrically") {
  Rng rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const phy::LinkGain sig{rng.uniform(0.1, 2.0), rng.uniform(1e-12, 1e-9)};
    std::vector<phy::LinkGain> a, b;
    const int n = 1 + rng.uniform_int(6);
    for (int i = 0; i < n; ++i) {
      const phy::LinkGain g{rng.uniform(0.0, 2.0), rng.uniform(0.0, 1e-9)};
      if (rng.uniform() < 0.5)
        a.push_back(g);
      else
        b.push_back(g);
    }
    const double noise = rng.uniform(1e-16, 1e-12);
    const double base = phy::sinr(sig, a, b, noise);

    // swap the lists
    CHECK(phy::sinr(sig, b, a, noise) == doctest::Approx(base).epsilon(1e-12));

    // move everything into one list
    std::vector<phy::LinkGain> merged = a;
    merged.insert(merged.end(), b.begin(), b.end());
    CHECK(phy::sinr(sig, merged, {}, noise) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("embb rb rate") {
  phy::PhyConstants phyc = default_phy();
  CHECK(phy::embb_rb_rate(3.0, 0, phyc) == doctest::Approx(360000.0).epsilon(1e-12));
  CHECK(phy::embb_rb_rate(57.3, 7, phyc) == 0.0);
  CHECK(phy::embb_rb_rate(1.0, 2, phyc) ==
        doctest::Approx(180e3 * 5.0 / 7.0).epsilon(1e-12));
  CHECK_THROWS_AS(phy::embb_rb_rate(1.0, 8, phyc), std::domain_error);
  CHECK_THROWS_AS(phy::embb_rb_rate(1.0, -1, phyc), std::domain_error);
}

TEST_CASE("embb rb rate monotonicity") {
  phy::PhyConstants phyc = default_phy();
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const double omega = rng.uniform(0.0, 100.0);
    for (int d = 0; d < 7; ++d)
      CHECK(phy::embb_rb_rate(omega, d, phyc) >= phy::embb_rb_rate(omega, d + 1, phyc));
    const double lo = rng.uniform(0.0, 50.0);
    const double hi = lo + rng.uniform(0.0, 50.0);
    const int d = rng.uniform_int(8);
    CHECK(phy::embb_rb_rate(hi, d, phyc) >= phy::embb_rb_rate(lo, d, phyc));
  }
}

TEST_CASE("embb user rate") {
  const std::vector<double> rates{100.0, 999.0};
  CHECK(phy::embb_user_rate(std::vector<int>{0, 0}, rates) == 0.0);
  CHECK(phy::embb_user_rate(std::vector<int>{1, 0}, rates) == 100.0);
  CHECK(phy::embb_user_rate(std::vector<int>{1, 1}, std::vector<double>{100.0, 200.0}) == 300.0);
  CHECK_THROWS_AS(phy::embb_user_rate(std::vector<int>{1}, rates), std::domain_error);
}

TEST_CASE("channel dispersion") {
  CHECK(phy::channel_dispersion(0.0) == 0.0);
  CHECK(phy::channel_dispersion(1.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(phy::channel_dispersion(1e6) == doctest::Approx(1.0).epsilon(1e-11));
  Rng rng(17);
  double prev = -1.0;
  for (double omega = 0.0; omega < 50.0; omega += 0.25) {
    const double d = phy::channel_dispersion(omega);
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
    CHECK(d > prev);
    prev = d;
  }
}

TEST_CASE("q_inv matches the bisection oracle") {
  CHECK(std::abs(phy::q_inv(0.5)) <= 1e-9);
  CHECK(phy::q_inv(1e-5) == doctest::Approx(4.2648907939228246).epsilon(1e-12));
  CHECK(phy::q_inv(0.022750131948179207) == doctest::Approx(2.0).epsilon(1e-12));

  // log-spaced sweep, both tails
  for (int i = 0; i <= 120; ++i) {
    const double x = std::pow(10.0, -9.0 + 8.6 * i / 120.0);
    CHECK(std::abs(phy::q_inv(x) - bisect_q_inv(x)) <= 1e-9);
    CHECK(std::abs(phy::q_inv(1.0 - x) - bisect_q_inv(1.0 - x)) <= 1e-9);
  }

  CHECK_THROWS_AS(phy::q_inv(0.0), std::domain_error);
  CHECK_THROWS_AS(phy::q_inv(1.0), std::domain_error);
  CHECK_THROWS_AS(phy::q_inv(-0.3), std::domain_error);
  CHECK_THROWS_AS(phy::q_inv(1.7), std::domain_error);
}

TEST_CASE("q_inv round trip") {
  for (int i = 0; i <= 200; ++i) {
    const double lx = -9.0 + (std::log10(1.0 - 1e-9) + 9.0) * i / 200.0;
    const double x = std::pow(10.0, lx);
    CHECK(gaussian_tail(phy::q_inv(x)) == doctest::Approx(x).epsilon(1e-8));
    CHECK(std::abs(gaussian_tail(phy::q_inv(x)) - x) <= 1e-8);
  }
}

TEST_CASE("urllc rate") {
  phy::PhyConstants phyc = default_phy();

  // x = 0.5 zeroes the dispersion penalty and collapses to the Shannon form
  phy::PhyConstants collapse = phyc;
  collapse.urllc_error_target = 0.5;
  CHECK(phy::urllc_rate(1.0, std::vector<int>{7}, 24, collapse) ==
        doctest::Approx(180000.0).epsilon(1e-12));

  CHECK(phy::urllc_rate(42.0, std::vector<int>{0, 0, 0}, 24, phyc) == 0.0);

  // frozen from the bisection oracle and exact arithmetic:
  // 180e3 * (2 - sqrt(0.9375 / 24) * 4.2648907939228246)
  const double expected = 208273.85009235077;
  CHECK(phy::urllc_rate(3.0, std::vector<int>{7}, 24, phyc) ==
        doctest::Approx(expected).epsilon(1e-12));
  const double recomputed =
      180e3 * (std::log2(4.0) - std::sqrt(phy::channel_dispersion(3.0) / 24.0) *
                                    bisect_q_inv(1e-5));
  CHECK(phy::urllc_rate(3.0, std::vector<int>{7}, 24, phyc) ==
        doctest::Approx(recomputed).epsilon(1e-12));
}

TEST_CASE("finite-blocklength penalty is nonnegative") {
  phy::PhyConstants phyc = default_phy();
  Rng rng(29);
  for (int trial = 0; trial < 20000; ++trial) {
    const double omega = std::pow(10.0, rng.uniform(-3.0, 3.0));
    const int punctured = rng.uniform_int(8);
    const int symbols = 1 + rng.uniform_int(200);
    phyc.urllc_error_target = std::pow(10.0, rng.uniform(-9.0, -0.40));
    const double with_penalty =
        phy::urllc_rate(omega, std::vector<int>{punctured}, symbols, phyc);
    const double shannon = phyc.rb_bandwidth_hz *
                           (static_cast<double>(punctured) / phyc.minislots_per_tti) *
                           std::log2(1.0 + omega);
    CHECK(with_penalty <= shannon + 1e-9);
    CHECK(with_penalty >= 0.0);
  }
}

TEST_CASE("phy constants validation") {
  phy::PhyConstants phyc = default_phy();
  CHECK_NOTHROW(phyc.validate());
  CHECK(phyc.symbols_per_block() == 24);
  phyc.urllc_error_target = 0.5;
  CHECK_THROWS_AS(phyc.validate(), std::domain_error);
  phyc = default_phy();
  phyc.rb_bandwidth_hz = 0.0;
  CHECK_THROWS_AS(phyc.validate(), std::domain_error);
  phyc = default_phy();
  phyc.minislots_per_tti = 0;
  CHECK_THROWS_AS(phyc.validate(), std::domain_error);
}
