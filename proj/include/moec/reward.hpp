#pragma once

#include <array>
#include <span>

#include "moec/common.hpp"

namespace moec::reward {

struct RewardConfig {
  double v_target = 12.0;    // m/s
  double v_low = 6.0;        // low-speed penalty threshold, m/s
  double ttc_max = 5.0;      // s, TTC saturation horizon
  double steer_max = 0.6;    // rad
  double acc_max = 3.0;      // m/s^2
  std::array<double, 2> omega{0.4, 0.6};  // weights of r_safe, r_gen
  // The efficiency term as printed rewards |v - v_target| growth; the negated
  // variant is the default, the verbatim form stays available for comparison.
  bool eff_negated = true;

  void validate() const;
};

struct RewardVector {
  double r_safe = 0.0;
  double r_gen = 0.0;
  double r_eff = 0.0;
  double r_comf = 0.0;
  double r_int = 0.0;
};

// -10 * f_unsafe + 0.5 * sat_[0,1](ttc / ttc_max)
double r_safe(bool f_unsafe, double ttc, double ttc_max);

double r_eff(double v, const RewardConfig& cfg);
double r_comf(double steer, double acc, const RewardConfig& cfg);
// Sum over observed SVs of -0.1 * |acc_n| / acc_max; absent slots pass 0.
double r_int(std::span<const double> sv_accels, const RewardConfig& cfg);

RewardVector compute(bool f_unsafe, double ttc, double v, double steer,
                     double acc, std::span<const double> sv_accels,
                     const RewardConfig& cfg);

// omega[0] * r_safe + omega[1] * r_gen
double r_all(const RewardVector& rv, std::span<const double> omega);

}  // namespace moec::reward
