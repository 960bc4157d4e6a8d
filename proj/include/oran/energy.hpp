#pragma once

#include <span>

namespace oran::energy {

struct PowerConfig {
  double p_max_w = 6.309573444801933;  // 38 dBm per-RU transmit budget
  double ru_circuit_power_w = 10.0;
  double du_power_w = 200.0;

  void validate() const;
};

// sum of transmit powers + L * P_RU + P_DU
double total_power(std::span<const double> tx_powers_w, int num_rus, const PowerConfig& power);

// bits per joule; the circuit floor keeps the denominator positive
double energy_efficiency(double sum_rate_bps, double total_power_w);

}  // namespace oran::energy
