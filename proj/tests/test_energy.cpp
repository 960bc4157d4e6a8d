#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "oran/energy.hpp"

using namespace oran;

TEST_CASE("total power") {
  energy::PowerConfig power;
  power.ru_circuit_power_w = 10.0;
  power.du_power_w = 200.0;
  CHECK(energy::total_power(std::vector<double>{}, 2, power) == doctest::Approx(220.0));
  CHECK(energy::total_power(std::vector<double>{0.5}, 2, power) == doctest::Approx(220.5));
  CHECK(energy::total_power(std::vector<double>{6.3096}, 8, power) ==
        doctest::Approx(286.3096).epsilon(1e-15));
  CHECK_THROWS_AS(energy::total_power(std::vector<double>{-0.1}, 2, power), std::domain_error);
}

TEST_CASE("energy efficiency") {
  CHECK(energy::energy_efficiency(0.0, 220.5) == 0.0);
  CHECK(energy::energy_efficiency(1e7, 220.5) ==
        doctest::Approx(45351.473922902494).epsilon(1e-15));
  CHECK_THROWS_AS(energy::energy_efficiency(1.0, 0.0), std::domain_error);
}

TEST_CASE("ee properties") {
  energy::PowerConfig power;
  // homogeneous of degree 1 in the rate
  const double base = energy::energy_efficiency(5e6, 230.0);
  CHECK(energy::energy_efficiency(2.0 * 5e6, 230.0) == doctest::Approx(2.0 * base));
  // strictly decreasing in circuit power at fixed rate
  energy::PowerConfig more = power;
  more.ru_circuit_power_w += 5.0;
  const double p1 = energy::total_power(std::vector<double>{1.0}, 2, power);
  const double p2 = energy::total_power(std::vector<double>{1.0}, 2, more);
  CHECK(energy::energy_efficiency(5e6, p2) < energy::energy_efficiency(5e6, p1));
  // circuit floor keeps the denominator positive
  CHECK(energy::total_power(std::vector<double>{}, 1, power) > 0.0);
}

TEST_CASE("power config validation") {
  energy::PowerConfig power;
  CHECK_NOTHROW(power.validate());
  CHECK(power.p_max_w == doctest::Approx(6.309573444801933).epsilon(1e-15));
  power.p_max_w = 0.0;
  CHECK_THROWS_AS(power.validate(), std::domain_error);
}
