#include "oran/phy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace oran::phy {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gaussian_tail(double z) { return 0.5 * std::erfc(z * kInvSqrt2); }
}  // namespace

void PhyConstants::validate() const {
  if (!(rb_bandwidth_hz > 0.0)) throw std::domain_error("phy: rb_bandwidth_hz must be > 0");
  if (minislots_per_tti < 1) throw std::domain_error("phy: minislots_per_tti must be >= 1");
  if (!(noise_power_w > 0.0)) throw std::domain_error("phy: noise_power_w must be > 0");
  if (symbols_per_minislot < 1) throw std::domain_error("phy: symbols_per_minislot must be >= 1");
  if (subcarriers_per_rb < 1) throw std::domain_error("phy: subcarriers_per_rb must be >= 1");
  if (!(urllc_error_target > 0.0 && urllc_error_target < 0.5))
    throw std::domain_error("phy: urllc_error_target must be in (0, 0.5)");
  if (!(tti_duration_s > 0.0)) throw std::domain_error("phy: tti_duration_s must be > 0");
}

double pathloss_db(double distance_km, double fixed_db, double slope_db) {
  if (!(distance_km > 0.0))
    throw std::domain_error("pathloss_db: distance must be > 0, got " +
                            std::to_string(distance_km));
  return fixed_db + slope_db * std::log10(distance_km);
}

double pathloss_db(double distance_km) { return pathloss_db(distance_km, 120.8, 37.5); }

double channel_gain(double pathloss_db_value, double fading_power, double shadowing_db) {
  if (fading_power < 0.0) throw std::domain_error("channel_gain: fading_power must be >= 0");
  return fading_power * std::pow(10.0, -(pathloss_db_value + shadowing_db) / 10.0);
}

double sinr(const LinkGain& signal, std::span<const LinkGain> same_service_interferers,
            std::span<const LinkGain> cross_service_interferers, double noise_power_w) {
  if (!(noise_power_w > 0.0)) throw std::domain_error("sinr: noise_power_w must be > 0");
  double denom = noise_power_w;
  for (const LinkGain& g : same_service_interferers) denom += g.received_power_w();
  for (const LinkGain& g : cross_service_interferers) denom += g.received_power_w();
  return signal.received_power_w() / denom;
}

double embb_rb_rate(double sinr_value, int punctured_minislots, const PhyConstants& phy) {
  const int m = phy.minislots_per_tti;
  if (punctured_minislots < 0 || punctured_minislots > m)
    throw std::domain_error("embb_rb_rate: punctured_minislots outside [0, M]");
  const double keep = 1.0 - static_cast<double>(punctured_minislots) / static_cast<double>(m);
  return phy.rb_bandwidth_hz * keep * std::log2(1.0 + sinr_value);
}

double embb_user_rate(std::span<const int> rb_assignment_row,
                      std::span<const double> per_rb_rates) {
  if (rb_assignment_row.size() != per_rb_rates.size())
    throw std::domain_error("embb_user_rate: assignment/rate length mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < per_rb_rates.size(); ++k)
    if (rb_assignment_row[k] != 0) total += per_rb_rates[k];
  return total;
}

double channel_dispersion(double sinr_value) {
  const double s = 1.0 + sinr_value;
  return 1.0 - 1.0 / (s * s);
}

double q_inv(double x) {
  if (!(x > 0.0 && x < 1.0)) throw std::domain_error("q_inv: x must be in (0, 1)");
  if (x > 0.5) return -q_inv(1.0 - x);
  if (x == 0.5) return 0.0;

  // Abramowitz & Stegun 26.2.23 rational initial guess (|error| < 4.5e-4),
  // then Newton on Q(z) - x down to machine precision.
  const double t = std::sqrt(-2.0 * std::log(x));
  double z = t - (2.515517 + t * (0.802853 + t * 0.010328)) /
                     (1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308)));
  for (int i = 0; i < 12; ++i) {
    const double f = gaussian_tail(z) - x;
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * z * z);
    const double dz = f / pdf;  // f' = -pdf, step is +f/pdf
    z += dz;
    if (std::abs(dz) <= 1e-15 * (1.0 + std::abs(z))) break;
  }
  return z;
}

double urllc_rb_rate(double sinr_value, int punctured_minislots, int symbols_per_block,
                     const PhyConstants& phy) {
  const int m = phy.minislots_per_tti;
  if (punctured_minislots < 0 || punctured_minislots > m)
    throw std::domain_error("urllc_rb_rate: punctured_minislots outside [0, M]");
  if (symbols_per_block < 1) throw std::domain_error("urllc_rb_rate: symbols_per_block < 1");
  if (punctured_minislots == 0) return 0.0;
  const double share = static_cast<double>(punctured_minislots) / static_cast<double>(m);
  const double dispersion = channel_dispersion(sinr_value);
  const double penalty = std::sqrt(dispersion / static_cast<double>(symbols_per_block)) *
                         q_inv(phy.urllc_error_target);
  const double bracket = std::log2(1.0 + sinr_value) - penalty;
  if (bracket <= 0.0) return 0.0;
  return phy.rb_bandwidth_hz * share * bracket;
}

double urllc_rate(double sinr_value, std::span<const int> punctured_minislots_per_rb,
                  int symbols_per_block, const PhyConstants& phy) {
  double total = 0.0;
  for (int punctured : punctured_minislots_per_rb)
    total += urllc_rb_rate(sinr_value, punctured, symbols_per_block, phy);
  return total;
}

}  // namespace oran::phy
