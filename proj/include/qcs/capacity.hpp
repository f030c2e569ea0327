#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "qcs/core_model.hpp"
#include "qcs/error.hpp"
#include "qcs/hardware.hpp"
#include "qcs/queueing.hpp"
#include "qcs/service_time.hpp"
#include "qcs/window_problem.hpp"

namespace qcs {

enum class CapacityMethod { ClosedForm, Bisection };

inline const char* to_string(CapacityMethod m) {
  return m == CapacityMethod::ClosedForm ? "closed_form" : "bisection";
}

struct CapacityResult {
  double value = 0.0;          ///< users, or km for critical distance
  double residual_load = 0.0;  ///< |rho(value) - 1|
  CapacityMethod method = CapacityMethod::ClosedForm;
  /// Critical distance only: rho stayed below 1 on the whole bracket, so the
  /// bracket end is returned.
  bool maxed_out = false;
  /// rho was nondecreasing over the sampled bracket points.
  bool bracket_monotone = true;
  /// Window moments came from Monte Carlo.
  bool sampled = false;
};

/// Largest user count with load <= 1:
///   floor(1/2 + 1/2 sqrt(1 + 8k / (lambda0 m E[T]))).
/// E[T] does not depend on u, so one window evaluation suffices.
inline CapacityResult u_crit(const Scenario& sc, window::MomentCache& cache) {
  const window::WindowMoments wm = cache.get(window::window_spec(sc));
  const ServiceMoments service = service_moments(sc, wm.moments);
  const auto& net = sc.network();
  const double lambda0 = sc.request().lambda0_per_us;
  const double k = net.stations;
  const double m = sc.batch();

  auto rho_at = [&](double users) { return lambda0 * users * (users - 1.0) * m / (2.0 * k) * service.m1; };

  double users = std::floor(0.5 + 0.5 * std::sqrt(1.0 + 8.0 * k / (lambda0 * m * service.m1)));
  // Guard the floor against rounding at an exact boundary.
  while (users > 1.0 && rho_at(users) > 1.0) users -= 1.0;
  while (rho_at(users + 1.0) <= 1.0) users += 1.0;

  CapacityResult out;
  out.value = users;
  out.residual_load = std::abs(rho_at(users) - 1.0);
  out.method = CapacityMethod::ClosedForm;
  out.sampled = wm.sampled();
  return out;
}

inline CapacityResult u_crit(const Scenario& sc, const window::WindowOptions& opts = {}) {
  window::MomentCache cache(opts);
  return u_crit(sc, cache);
}

inline constexpr int lcrit_max_steps = 200;
inline constexpr double lcrit_load_tol = 1e-6;
inline constexpr double lcrit_width_tol_km = 1e-6;

/// Load as a function of the arm length with everything else from `sc`;
/// p follows the hardware model when the scenario uses all-photonic stations.
inline double load_at_distance(const Scenario& sc, int users, double arm_km,
                               window::MomentCache& cache) {
  const auto& net = sc.network();
  const double p = std::holds_alternative<FixedProbability>(net.success)
                       ? std::get<FixedProbability>(net.success).p
                       : hardware::p_success(arm_km, net.repeaters);
  const double scale =
      sc.request().lambda0_per_us * users * (users - 1.0) * sc.batch() / (2.0 * net.stations);
  auto rho_for = [&](double eb) {
    return scale * (2.0 * arm_km / net.c_km_per_us + net.t_fwd_us * (2.0 * net.repeaters + eb));
  };
  // At least n successes are collected by batch B, so E[B] >= n / (m p).
  // Past the point where that alone overloads, return the bound instead of
  // summing a series whose length grows like 1/p.
  const double bound = rho_for(sc.request().packets / (sc.batch() * p));
  if (bound > 2.0) return bound;
  const window::WindowSpec spec{sc.request().packets, sc.request().window, p, sc.batch()};
  return rho_for(cache.get(spec).moments.m1);
}

/// Arm length where the load reaches 1, by bisection on (0, U] with
/// U = c k / (lambda0 u (u-1) m), the distance at which travel time alone
/// saturates the system. Returns 0 when even a vanishing arm overloads.
inline CapacityResult l_crit(const Scenario& sc, int users, window::MomentCache& cache) {
  if (users < 2) throw Error(ErrorKind::InvalidParameter, "u must be >= 2");
  const auto& net = sc.network();
  const double upper = net.c_km_per_us * net.stations /
                       (sc.request().lambda0_per_us * users * (users - 1.0) * sc.batch());
  auto rho = [&](double L) { return load_at_distance(sc, users, L, cache); };

  CapacityResult out;
  out.method = CapacityMethod::Bisection;
  out.sampled = !sc.request().window.is_infinite() &&
                !(std::holds_alternative<FixedProbability>(net.success) &&
                  std::get<FixedProbability>(net.success).p >= 1.0);

  // Loads are clipped at 2 for the monotonicity probe: beyond that
  // load_at_distance may return a lower bound rather than the load itself.
  constexpr int probes = 16;
  const double rho_zero = rho(0.0);
  double prev = std::min(rho_zero, 2.0);
  for (int i = 1; i <= probes; ++i) {
    const double r = std::min(rho(upper * i / probes), 2.0);
    if (r < prev) out.bracket_monotone = false;
    prev = r;
  }

  if (rho_zero >= 1.0) {
    out.value = 0.0;
    out.residual_load = std::abs(rho_zero - 1.0);
    return out;
  }
  const double rho_upper = rho(upper);
  if (rho_upper < 1.0) {
    out.value = upper;
    out.residual_load = std::abs(rho_upper - 1.0);
    out.maxed_out = true;
    return out;
  }

  double lo = 0.0;
  double hi = upper;
  for (int step = 0; step < lcrit_max_steps; ++step) {
    const double mid = 0.5 * (lo + hi);
    const double r = rho(mid);
    if (r < 1.0) lo = mid;
    else hi = mid;
    if (std::abs(r - 1.0) < lcrit_load_tol || hi - lo < lcrit_width_tol_km) {
      out.value = mid;
      out.residual_load = std::abs(r - 1.0);
      return out;
    }
  }
  throw Error(ErrorKind::NonConvergence, "critical distance bisection did not converge");
}

inline CapacityResult l_crit(const Scenario& sc, int users, const window::WindowOptions& opts = {}) {
  window::MomentCache cache(opts);
  return l_crit(sc, users, cache);
}

}  // namespace qcs
