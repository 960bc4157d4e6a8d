#include "oran/energy.hpp"

#include <stdexcept>

namespace oran::energy {

void PowerConfig::validate() const {
  if (!(p_max_w > 0.0)) throw std::domain_error("power: p_max_w must be > 0");
  if (ru_circuit_power_w < 0.0) throw std::domain_error("power: ru_circuit_power_w must be >= 0");
  if (du_power_w < 0.0) throw std::domain_error("power: du_power_w must be >= 0");
}

double total_power(std::span<const double> tx_powers_w, int num_rus, const PowerConfig& power) {
  double total = 0.0;
  for (double p : tx_powers_w) {
    if (p < 0.0) throw std::domain_error("total_power: negative transmit power entry");
    total += p;
  }
  return total + static_cast<double>(num_rus) * power.ru_circuit_power_w + power.du_power_w;
}

double energy_efficiency(double sum_rate_bps, double total_power_w) {
  if (!(total_power_w > 0.0)) throw std::domain_error("energy_efficiency: power must be > 0");
  return sum_rate_bps / total_power_w;
}

}  // namespace oran::energy
