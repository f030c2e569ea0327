#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <variant>

#include "qcs/error.hpp"
#include "qcs/hardware.hpp"

namespace qcs {

/// Request window, measured in batches (one batch per forwarding time).
class Window {
 public:
  static constexpr Window infinite() noexcept { return Window(0); }
  static Window batches(int count) {
    if (count < 1) throw Error(ErrorKind::InvalidParameter, "window must be >= 1 batch or infinite");
    return Window(count);
  }

  constexpr bool is_infinite() const noexcept { return batches_ == 0; }
  /// Window length in batches; only meaningful when finite.
  constexpr int size() const noexcept { return batches_; }

  friend constexpr bool operator==(Window, Window) = default;

  std::string str() const { return is_infinite() ? "inf" : std::to_string(batches_); }

 private:
  constexpr explicit Window(int b) noexcept : batches_(b) {}
  int batches_;
};

struct FixedProbability {
  double p;
};
struct AllPhotonic {};

/// Where the per-packet success probability comes from.
using SuccessSource = std::variant<FixedProbability, AllPhotonic>;

struct NetworkConfig {
  int users = 2;
  double arm_km = 1.0;        ///< user-to-hub distance
  int repeaters = 0;          ///< repeaters per arm, hub excluded
  int stations = 1;           ///< forwarding stations per repeater
  double t_fwd_us = 100.0;    ///< forwarding time per packet
  double c_km_per_us = 0.2;   ///< signal speed in fiber
  double t_control_us = 0.0;  ///< constant control delay added to every sojourn
  SuccessSource success = FixedProbability{1.0};
};

struct RequestModel {
  int packets = 1;
  Window window = Window::infinite();
  double lambda0_per_us = 1e-4;  ///< request rate per user pair
};

enum class Strategy { Sequential, Parallel };

inline const char* to_string(Strategy s) {
  return s == Strategy::Sequential ? "sequential" : "parallel";
}

/// Packets sent per batch: 1 for sequential, all k stations for parallel.
constexpr int batch_size(Strategy s, int stations) noexcept {
  return s == Strategy::Sequential ? 1 : stations;
}

/// Requests served concurrently: k for sequential, 1 for parallel.
constexpr int server_count(Strategy s, int stations) noexcept {
  return s == Strategy::Sequential ? stations : 1;
}

/// First two raw moments of a nonnegative random variable.
struct MomentPair {
  double m1 = 0.0;
  double m2 = 0.0;

  double variance() const noexcept { return m2 - m1 * m1; }
  /// Squared coefficient of variation, Var / mean^2.
  double scv() const noexcept { return m2 / (m1 * m1) - 1.0; }
};

/// Aggregate Poisson rate over all u(u-1)/2 user pairs.
constexpr double aggregate_rate(int users, double lambda0) noexcept {
  return static_cast<double>(users) * (users - 1) / 2.0 * lambda0;
}

/// A configuration that passed validate(); carries the derived quantities
/// every other module consumes.
class Scenario {
 public:
  const NetworkConfig& network() const noexcept { return network_; }
  const RequestModel& request() const noexcept { return request_; }
  Strategy strategy() const noexcept { return strategy_; }

  double arrival_rate() const noexcept { return arrival_rate_; }
  int batch() const noexcept { return batch_; }
  int servers() const noexcept { return servers_; }
  double hop_km() const noexcept { return hop_km_; }
  double success_probability() const noexcept { return p_; }

 private:
  friend Scenario validate(const NetworkConfig&, const RequestModel&, Strategy);
  Scenario() = default;

  NetworkConfig network_;
  RequestModel request_;
  Strategy strategy_ = Strategy::Sequential;
  double arrival_rate_ = 0.0;
  int batch_ = 1;
  int servers_ = 1;
  double hop_km_ = 0.0;
  double p_ = 1.0;
};

namespace detail {
inline void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::InvalidParameter, what);
}
inline bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }
}  // namespace detail

/// Checks every parameter and derives lambda, m, s, L0 and p. Rejects finite
/// windows that can never hold n successes (w * m < n).
inline Scenario validate(const NetworkConfig& net, const RequestModel& req, Strategy strat) {
  using detail::positive_finite;
  using detail::require;
  require(net.users >= 2, "u must be >= 2");
  require(positive_finite(net.arm_km), "L must be finite and > 0");
  require(net.repeaters >= 0, "N must be >= 0");
  require(net.stations >= 1, "k must be >= 1");
  require(positive_finite(net.t_fwd_us), "t_fwd must be finite and > 0");
  require(positive_finite(net.c_km_per_us), "c must be finite and > 0");
  require(std::isfinite(net.t_control_us) && net.t_control_us >= 0.0, "t_control must be >= 0");
  require(req.packets >= 1, "n must be >= 1");
  require(positive_finite(req.lambda0_per_us), "lambda0 must be finite and > 0");

  Scenario sc;
  sc.network_ = net;
  sc.request_ = req;
  sc.strategy_ = strat;
  sc.batch_ = batch_size(strat, net.stations);
  sc.servers_ = server_count(strat, net.stations);
  sc.hop_km_ = net.arm_km / (net.repeaters + 1);
  sc.arrival_rate_ = aggregate_rate(net.users, req.lambda0_per_us);
  require(std::isfinite(sc.arrival_rate_), "aggregate rate overflow");

  if (const auto* fixed = std::get_if<FixedProbability>(&net.success)) {
    require(fixed->p > 0.0 && fixed->p <= 1.0, "fixed p must lie in (0, 1]");
    sc.p_ = fixed->p;
  } else {
    sc.p_ = hardware::p_success(net.arm_km, net.repeaters);
  }

  if (!req.window.is_infinite() &&
      static_cast<std::int64_t>(req.window.size()) * sc.batch_ < req.packets) {
    throw Error(ErrorKind::InfeasibleWindow,
                "window of " + req.window.str() + " batches of " + std::to_string(sc.batch_) +
                    " packets cannot hold " + std::to_string(req.packets) + " successes");
  }
  return sc;
}

inline Scenario with_users(const Scenario& sc, int users) {
  NetworkConfig net = sc.network();
  net.users = users;
  return validate(net, sc.request(), sc.strategy());
}

inline Scenario with_strategy(const Scenario& sc, Strategy strat) {
  return validate(sc.network(), sc.request(), strat);
}

}  // namespace qcs
