#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "qcs/core_model.hpp"
#include "qcs/error.hpp"
#include "qcs/service_time.hpp"
#include "qcs/window_problem.hpp"

namespace qcs {

enum class WaitMethod { ExactMG1, ExactMMs, LeeLongton, Simulated };

inline const char* to_string(WaitMethod m) {
  switch (m) {
    case WaitMethod::ExactMG1: return "exact_mg1";
    case WaitMethod::ExactMMs: return "exact_mms";
    case WaitMethod::LeeLongton: return "lee_longton";
    case WaitMethod::Simulated: return "simulated";
  }
  return "unknown";
}

/// Mean waiting time; empty when the queue is unstable (unbounded wait).
struct WaitEstimate {
  std::optional<double> mean_wait;
  WaitMethod method = WaitMethod::ExactMG1;

  bool stable() const noexcept { return mean_wait.has_value(); }
};

struct QueueInputs {
  double lambda = 0.0;  ///< aggregate arrival rate, 1/us
  int servers = 1;
  MomentPair service;   ///< E[T], E[T^2]
};

/// rho = lambda0 u (u-1) m / (2k) * E[T].
inline double load(const Scenario& sc, const ServiceMoments& service) {
  const auto& net = sc.network();
  return sc.request().lambda0_per_us * net.users * (net.users - 1.0) * sc.batch() /
         (2.0 * net.stations) * service.m1;
}

/// Pollaczek-Khinchine mean wait for M/G/1.
inline WaitEstimate wait_mg1(double lambda, const MomentPair& service) {
  const double busy = lambda * service.m1;
  if (busy >= 1.0) return {std::nullopt, WaitMethod::ExactMG1};
  return {lambda * service.m2 / (2.0 * (1.0 - busy)), WaitMethod::ExactMG1};
}

/// M/M/s mean wait,
///   W = a^s / (s! s mu z^2) / (a^s / (s! z) + sum_{i<s} a^i / i!),
/// with a = lambda/mu and z = 1 - lambda/(s mu). Terms are scaled by their
/// largest log-magnitude so s in the hundreds does not overflow.
inline WaitEstimate wait_mms(double lambda, double mu, int servers) {
  if (!(mu > 0.0)) throw Error(ErrorKind::InvalidParameter, "service rate must be > 0");
  if (servers < 1) throw Error(ErrorKind::InvalidParameter, "server count must be >= 1");
  if (lambda < 0.0) throw Error(ErrorKind::InvalidParameter, "arrival rate must be >= 0");
  const double s = servers;
  const double z = 1.0 - lambda / (s * mu);
  if (z <= 0.0) return {std::nullopt, WaitMethod::ExactMMs};
  if (lambda == 0.0) return {0.0, WaitMethod::ExactMMs};

  const double log_a = std::log(lambda / mu);
  const double log_top = s * log_a - std::lgamma(s + 1.0);  // log(a^s / s!)
  double scale = log_top - std::log(z);
  for (int i = 0; i < servers; ++i) scale = std::max(scale, i * log_a - std::lgamma(i + 1.0));

  double denom = std::exp(log_top - std::log(z) - scale);
  for (int i = 0; i < servers; ++i) denom += std::exp(i * log_a - std::lgamma(i + 1.0) - scale);
  const double numer = std::exp(log_top - scale) / (s * mu * z * z);
  return {numer / denom, WaitMethod::ExactMMs};
}

/// Lee-Longton M/G/s approximation (C^2 + 1)/2 * W(M/M/s). A single server
/// uses the exact M/G/1 formula instead.
inline WaitEstimate wait_mgs_approx(const QueueInputs& in) {
  if (in.servers < 1) throw Error(ErrorKind::InvalidParameter, "server count must be >= 1");
  if (in.servers == 1) return wait_mg1(in.lambda, in.service);
  const double scv = std::max(0.0, in.service.m2 / (in.service.m1 * in.service.m1) - 1.0);
  WaitEstimate mms = wait_mms(in.lambda, 1.0 / in.service.m1, in.servers);
  if (!mms.stable()) return {std::nullopt, WaitMethod::LeeLongton};
  return {(scv + 1.0) / 2.0 * *mms.mean_wait, WaitMethod::LeeLongton};
}

/// Everything computed on the way to the mean sojourn time of one scenario.
struct SojournEstimate {
  window::WindowMoments window;
  ServiceMoments service;
  double rho = 0.0;
  WaitEstimate wait;
  /// t_control + E[T_wait] + E[T_service]; empty when overloaded.
  std::optional<double> mean_sojourn;
  /// Standard error propagated from sampled window moments (0 otherwise).
  double mean_sojourn_se = 0.0;

  bool stable() const noexcept { return mean_sojourn.has_value(); }
};

namespace detail {

inline std::optional<double> sojourn_from_batches(const Scenario& sc, const MomentPair& batches,
                                                  ServiceMoments* service_out = nullptr,
                                                  WaitEstimate* wait_out = nullptr,
                                                  double* rho_out = nullptr) {
  const ServiceMoments service = service_moments(sc, batches);
  const double rho = load(sc, service);
  WaitEstimate wait = rho < 1.0
                          ? wait_mgs_approx({sc.arrival_rate(), sc.servers(), service.pair()})
                          : WaitEstimate{std::nullopt, sc.servers() == 1 ? WaitMethod::ExactMG1
                                                                         : WaitMethod::LeeLongton};
  if (service_out) *service_out = service;
  if (wait_out) *wait_out = wait;
  if (rho_out) *rho_out = rho;
  if (!wait.stable()) return std::nullopt;
  return sc.network().t_control_us + *wait.mean_wait + service.m1;
}

}  // namespace detail

/// Analytic mean sojourn with moments routed by window_moments: exact M/G/1
/// for one server (parallel, or sequential with k = 1), Lee-Longton
/// otherwise. Overload is reported through stable(), never as infinity.
inline SojournEstimate evaluate(const Scenario& sc, window::MomentCache& cache) {
  SojournEstimate out;
  out.window = cache.get(window::window_spec(sc));
  out.mean_sojourn =
      detail::sojourn_from_batches(sc, out.window.moments, &out.service, &out.wait, &out.rho);

  if (out.stable() && out.window.sampled()) {
    // First-order propagation of the window-moment standard errors.
    const MomentPair base = out.window.moments;
    auto partial = [&](bool second) {
      const double v = second ? base.m2 : base.m1;
      const double h = std::max(1e-7 * std::abs(v), 1e-9);
      MomentPair hi = base, lo = base;
      (second ? hi.m2 : hi.m1) += h;
      (second ? lo.m2 : lo.m1) -= h;
      const auto fh = detail::sojourn_from_batches(sc, hi);
      const auto fl = detail::sojourn_from_batches(sc, lo);
      if (!fh || !fl) return std::numeric_limits<double>::infinity();
      return (*fh - *fl) / (2.0 * h);
    };
    const double g1 = partial(false);
    const double g2 = partial(true);
    const auto& w = out.window;
    const double var = g1 * g1 * w.se_m1 * w.se_m1 + g2 * g2 * w.se_m2 * w.se_m2 +
                       2.0 * g1 * g2 * w.cov_m1_m2;
    out.mean_sojourn_se = std::sqrt(std::max(0.0, var));
  }
  return out;
}

inline SojournEstimate evaluate(const Scenario& sc, const window::WindowOptions& opts = {}) {
  window::MomentCache cache(opts);
  return evaluate(sc, cache);
}

/// Mean sojourn time in us; throws Overloaded when rho >= 1.
inline double mean_sojourn(const Scenario& sc, const window::WindowOptions& opts = {}) {
  const SojournEstimate est = evaluate(sc, opts);
  if (!est.stable()) {
    throw Error(ErrorKind::Overloaded, "load " + std::to_string(est.rho) + " >= 1");
  }
  return *est.mean_sojourn;
}

}  // namespace qcs
