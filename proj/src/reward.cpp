#include "moec/reward.hpp"

#include <cmath>

namespace moec::reward {

void RewardConfig::validate() const {
  if (!(v_low < v_target))
    throw ConfigError("reward: v_low must be below v_target");
  if (!(ttc_max > 0.0)) throw ConfigError("reward: ttc_max must be positive");
  if (!(steer_max > 0.0) || !(acc_max > 0.0))
    throw ConfigError("reward: steer_max and acc_max must be positive");
  if (std::abs(omega[0] + omega[1] - 1.0) > 1e-9)
    throw ConfigError("reward: omega must sum to 1");
}

double r_safe(bool f_unsafe, double ttc, double ttc_max) {
  return -10.0 * (f_unsafe ? 1.0 : 0.0) +
         0.5 * saturate(ttc / ttc_max, 0.0, 1.0);
}

double r_eff(double v, const RewardConfig& cfg) {
  const double track = std::abs(v - cfg.v_target) / cfg.v_target;
  const double low = std::max(0.0, (cfg.v_low - v) / cfg.v_low);
  return (cfg.eff_negated ? -track : track) - low;
}

double r_comf(double steer, double acc, const RewardConfig& cfg) {
  return -0.5 * std::abs(steer) / cfg.steer_max -
         0.5 * std::abs(acc) / cfg.acc_max;
}

double r_int(std::span<const double> sv_accels, const RewardConfig& cfg) {
  double s = 0.0;
  for (double a : sv_accels) s += std::abs(a) / cfg.acc_max;
  return -0.1 * s;
}

RewardVector compute(bool f_unsafe, double ttc, double v, double steer,
                     double acc, std::span<const double> sv_accels,
                     const RewardConfig& cfg) {
  RewardVector rv;
  rv.r_safe = r_safe(f_unsafe, ttc, cfg.ttc_max);
  rv.r_eff = r_eff(v, cfg);
  rv.r_comf = r_comf(steer, acc, cfg);
  rv.r_int = r_int(sv_accels, cfg);
  rv.r_gen = rv.r_eff + rv.r_comf + rv.r_int;
  return rv;
}

double r_all(const RewardVector& rv, std::span<const double> omega) {
  return omega[0] * rv.r_safe + omega[1] * rv.r_gen;
}

}  // namespace moec::reward
