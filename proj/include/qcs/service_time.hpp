#pragma once

#include <algorithm>

#include "qcs/core_model.hpp"

namespace qcs {

/// Service-time moments under T = x + y B, with x = 2L/c + 2 t_fwd N the
/// travel-plus-forwarding offset of the first batch and y = t_fwd the spacing
/// between batches.
struct ServiceMoments {
  double m1 = 0.0;  ///< us
  double m2 = 0.0;  ///< us^2
  double x = 0.0;   ///< us
  double y = 0.0;   ///< us

  MomentPair pair() const noexcept { return {m1, m2}; }
};

/// Maps E[B], E[B^2] to E[T], E[T^2]. The second moment is assembled term by
/// term as (4L^2/c^2 + 8 L t N / c + 4 t^2 N^2) + (4 L t / c + 4 t^2 N) E[B]
/// + t^2 E[B^2].
inline ServiceMoments service_moments(const Scenario& sc, const MomentPair& batches) {
  const auto& net = sc.network();
  const double L = net.arm_km;
  const double c = net.c_km_per_us;
  const double t = net.t_fwd_us;
  const double N = net.repeaters;

  ServiceMoments out;
  out.x = 2.0 * L / c + 2.0 * t * N;
  out.y = t;
  out.m1 = 2.0 * L / c + t * (2.0 * N + batches.m1);
  const double constant = 4.0 * L * L / (c * c) + 8.0 * L / c * t * N + 4.0 * t * t * N * N;
  const double linear = 4.0 * L / c * t + 4.0 * t * t * N;
  out.m2 = constant + linear * batches.m1 + t * t * batches.m2;
  return out;
}

/// Squared coefficient of variation of the service time. Never exceeds the
/// SCV of B because x >= 0.
inline double c2_service(const ServiceMoments& sm) {
  return std::max(0.0, sm.m2 / (sm.m1 * sm.m1) - 1.0);
}

}  // namespace qcs
