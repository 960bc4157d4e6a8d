#pragma once

#include <span>

namespace oran::phy {

struct PhyConstants {
  double rb_bandwidth_hz = 180e3;
  int minislots_per_tti = 7;
  double noise_power_w = 3.59e-15;  // thermal floor for 180 kHz + 7 dB NF
  int symbols_per_minislot = 2;
  int subcarriers_per_rb = 12;
  double urllc_error_target = 1e-5;  // argument of the Q^-1 dispersion factor
  double tti_duration_s = 1e-3;

  // finite-blocklength code size in symbols for one mini-slot
  int symbols_per_block() const { return symbols_per_minislot * subcarriers_per_rb; }

  void validate() const;  // throws std::domain_error on violated invariants
};

struct LinkGain {
  double tx_power_w = 0.0;
  double gain_linear = 0.0;

  double received_power_w() const { return tx_power_w * gain_linear; }
};

// 120.8 + 37.5*log10(d), d in kilometers
double pathloss_db(double distance_km);
double pathloss_db(double distance_km, double fixed_db, double slope_db);

// g = fading_power * 10^(-(pathloss + shadowing)/10)
double channel_gain(double pathloss_db, double fading_power, double shadowing_db);

// Omega = p*g / (sum of interferer p*g over both lists + noise). The two
// lists carry the same-service and cross-service interferers; they enter
// the denominator symmetrically.
double sinr(const LinkGain& signal, std::span<const LinkGain> same_service_interferers,
            std::span<const LinkGain> cross_service_interferers, double noise_power_w);

// r = B * (1 - punctured/M) * log2(1 + Omega)
double embb_rb_rate(double sinr_value, int punctured_minislots, const PhyConstants& phy);

// dot product of a binary RB-assignment row with per-RB rates
double embb_user_rate(std::span<const int> rb_assignment_row,
                      std::span<const double> per_rb_rates);

// D = 1 - 1/(1+Omega)^2, in [0, 1)
double channel_dispersion(double sinr_value);

// z such that Q(z) = x, with Q the Gaussian tail function. Converges to
// machine precision (contract: absolute error <= 1e-9).
double q_inv(double x);

// One RB's finite-blocklength throughput share:
// B * (punctured/M) * max(0, log2(1+Omega) - sqrt(D/C) * Q^-1(x)).
// The bracket is floored at zero.
double urllc_rb_rate(double sinr_value, int punctured_minislots, int symbols_per_block,
                     const PhyConstants& phy);

// Sum of urllc_rb_rate over the RB axis at a common SINR.
double urllc_rate(double sinr_value, std::span<const int> punctured_minislots_per_rb,
                  int symbols_per_block, const PhyConstants& phy);

}  // namespace oran::phy
