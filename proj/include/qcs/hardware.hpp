#pragma once

#include <algorithm>
#include <cmath>

#include "qcs/error.hpp"

namespace qcs::hardware {

/// Effective attenuation of all-photonic forwarding stations running the
/// [[48,6,8]] generalized bicycle code with station efficiency 0.9.
/// alpha_eff(L0) = 1e-6 * (277 L0^2 + 29 L0^4) dB/km, L0 in km.
struct AttenuationModel {
  static constexpr double quadratic = 277e-6;
  static constexpr double quartic = 29e-6;
  /// Station efficiency the fit was made for; not a free parameter.
  static constexpr double station_efficiency = 0.9;
};

/// Lower clamp on success probability for absurd geometries.
inline constexpr double min_success_probability = 1e-300;

/// Default upper bound for the repeater-count scan.
inline constexpr int default_max_repeaters = 50;

inline double alpha_eff(double hop_km) {
  if (!(hop_km >= 0.0) || !std::isfinite(hop_km)) {
    throw Error(ErrorKind::InvalidParameter, "hop length must be finite and nonnegative");
  }
  const double l2 = hop_km * hop_km;
  return AttenuationModel::quadratic * l2 + AttenuationModel::quartic * l2 * l2;
}

/// End-to-end packet success probability over the 2L user-to-user path with
/// N repeaters per arm: 10^(-alpha_eff(L/(N+1)) * 2L / 10), clamped to
/// [1e-300, 1].
inline double p_success(double arm_km, int repeaters) {
  if (!(arm_km >= 0.0) || !std::isfinite(arm_km)) {
    throw Error(ErrorKind::InvalidParameter, "arm length must be finite and nonnegative");
  }
  if (repeaters < 0) throw Error(ErrorKind::InvalidParameter, "repeater count must be >= 0");
  const double hop = arm_km / (repeaters + 1);
  const double loss_db = alpha_eff(hop) * 2.0 * arm_km;
  return std::clamp(std::pow(10.0, -loss_db / 10.0), min_success_probability, 1.0);
}

/// Cost (2N+1)/(L p) minimized when choosing the repeater count.
inline double repeater_cost(double arm_km, int repeaters) {
  return (2.0 * repeaters + 1.0) / (arm_km * p_success(arm_km, repeaters));
}

/// Exhaustive argmin of repeater_cost over N in [0, max_repeaters]; ties go
/// to the smaller N.
inline int optimize_N(double arm_km, int max_repeaters = default_max_repeaters) {
  if (!(arm_km > 0.0)) throw Error(ErrorKind::InvalidParameter, "arm length must be > 0");
  if (max_repeaters < 0) throw Error(ErrorKind::InvalidParameter, "max_repeaters must be >= 0");
  int best = 0;
  double best_cost = repeater_cost(arm_km, 0);
  for (int n = 1; n <= max_repeaters; ++n) {
    const double cost = repeater_cost(arm_km, n);
    if (cost < best_cost) {
      best_cost = cost;
      best = n;
    }
  }
  return best;
}

}  // namespace qcs::hardware
