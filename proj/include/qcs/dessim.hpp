#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <queue>
#include <vector>

#include "qcs/core_model.hpp"
#include "qcs/error.hpp"
#include "qcs/queueing.hpp"
#include "qcs/random.hpp"
#include "qcs/service_time.hpp"
#include "qcs/window_problem.hpp"

// Discrete-event simulation of the FIFO M/G/s request queue. Requests arrive
// as a Poisson stream, wait in an unbounded queue and hold one of s servers
// for x + y B microseconds, B drawn from the window sampler.
namespace qcs::sim {

inline constexpr std::uint64_t min_measured_requests = 1000;
inline constexpr int min_replications = 5;
inline constexpr std::uint64_t max_default_warmup = 100'000;

struct SimConfig {
  Scenario scenario;
  /// 0 selects the default 10 s ceil(rho / (1 - rho)), capped at 1e5.
  std::uint64_t warmup_requests = 0;
  std::uint64_t measured_requests = 10'000;
  int replications = 10;
  std::uint64_t master_seed = 1;
};

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

struct ReplicationResult {
  double mean_wait = 0.0;
  double mean_service = 0.0;
  double mean_sojourn = 0.0;
  double mean_in_system = 0.0;  ///< time average over the measurement window
  double throughput = 0.0;      ///< departures per us in the measurement window
  double utilization = 0.0;     ///< busy fraction of the s servers
  std::uint64_t requests = 0;
};

struct SimReport {
  Estimate mean_sojourn;
  Estimate mean_wait;
  Estimate mean_service;
  Estimate mean_in_system;
  Estimate throughput;
  Estimate utilization;
  /// Per-replication L - lambda (W + S): zero in expectation by Little's law.
  Estimate little_gap;
  double rho = 0.0;
  std::uint64_t warmup_requests = 0;
  std::uint64_t requests_completed = 0;
  std::vector<ReplicationResult> replications;
};

/// Seed of stream `stream` (0 arrivals, 1 service draws) in replication r:
/// derive_seed(derive_seed(master_seed, r), stream).
inline std::uint64_t replication_seed(std::uint64_t master, int replication, int stream) {
  return derive_seed(derive_seed(master, static_cast<std::uint64_t>(replication)),
                     static_cast<std::uint64_t>(stream));
}

inline std::uint64_t default_warmup(double rho, int servers) {
  const double blocks = std::ceil(rho / (1.0 - rho));
  const double w = 10.0 * servers * std::max(1.0, blocks);
  return static_cast<std::uint64_t>(std::min<double>(w, max_default_warmup));
}

namespace detail {

enum class EventKind { Arrival, Departure };

struct Event {
  double time;
  std::uint64_t seq;
  EventKind kind;
  std::uint64_t request;

  // Min-heap on (time, seq).
  bool operator>(const Event& o) const noexcept {
    return time != o.time ? time > o.time : seq > o.seq;
  }
};

inline ReplicationResult run_replication(const Scenario& sc, std::uint64_t warmup,
                                         std::uint64_t measured, std::uint64_t master_seed,
                                         int index) {
  const double lambda = sc.arrival_rate();
  const int servers = sc.servers();
  const ServiceMoments shape = service_moments(sc, {0.0, 0.0});
  const std::uint64_t total = warmup + measured;

  RandomStream arrivals(replication_seed(master_seed, index, 0));
  RandomStream draws(replication_seed(master_seed, index, 1));
  window::BatchSampler sampler(window::window_spec(sc));

  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::uint64_t seq = 0;
  std::vector<double> arrival_time(total, 0.0);
  std::deque<std::uint64_t> waiting;
  int busy = 0;

  bool window_open = false;
  bool window_closed = false;
  double window_start = 0.0;
  double window_end = 0.0;
  double last_time = 0.0;
  double area_in_system = 0.0;
  double area_busy = 0.0;
  std::uint64_t in_system = 0;
  std::uint64_t departures_in_window = 0;
  std::uint64_t measured_done = 0;
  double sum_wait = 0.0;
  double sum_service = 0.0;

  auto is_measured = [&](std::uint64_t id) { return id >= warmup && id < total; };

  // Integrates the part of [last_time, now] inside the measurement window.
  auto advance = [&](double now) {
    if (window_open) {
      const double lo = std::max(last_time, window_start);
      const double hi = window_closed ? std::min(now, window_end) : now;
      if (hi > lo) {
        area_in_system += static_cast<double>(in_system) * (hi - lo);
        area_busy += static_cast<double>(busy) * (hi - lo);
      }
    }
    last_time = now;
  };

  auto start_service = [&](std::uint64_t id, double now) {
    ++busy;
    const double batches = static_cast<double>(sampler(draws));
    const double service = shape.x + shape.y * batches;
    if (is_measured(id)) {
      sum_wait += now - arrival_time[id];
      sum_service += service;
    }
    events.push({now + service, seq++, EventKind::Departure, id});
  };

  events.push({arrivals.exponential(lambda), seq++, EventKind::Arrival, 0});
  while (!events.empty()) {
    const Event ev = events.top();
    events.pop();
    advance(ev.time);
    if (ev.kind == EventKind::Arrival) {
      const std::uint64_t id = ev.request;
      arrival_time[id] = ev.time;
      if (id == warmup) {
        window_open = true;
        window_start = ev.time;
      }
      if (id + 1 == total) {
        window_closed = true;
        window_end = ev.time;
      }
      ++in_system;
      if (id + 1 < total) {
        events.push({ev.time + arrivals.exponential(lambda), seq++, EventKind::Arrival, id + 1});
      }
      if (busy < servers) start_service(id, ev.time);
      else waiting.push_back(id);
    } else {
      --busy;
      --in_system;
      if (window_open && (!window_closed || ev.time <= window_end)) ++departures_in_window;
      if (is_measured(ev.request)) ++measured_done;
      if (!waiting.empty()) {
        const std::uint64_t next = waiting.front();
        waiting.pop_front();
        start_service(next, ev.time);
      }
      if (measured_done == measured) break;
    }
  }

  ReplicationResult r;
  const double span = window_end - window_start;
  const double n = static_cast<double>(measured);
  r.requests = measured_done;
  r.mean_wait = sum_wait / n;
  r.mean_service = sum_service / n;
  r.mean_sojourn = sc.network().t_control_us + r.mean_wait + r.mean_service;
  if (span > 0.0) {
    r.mean_in_system = area_in_system / span;
    r.throughput = static_cast<double>(departures_in_window) / span;
    r.utilization = area_busy / (span * servers);
  }
  return r;
}

inline Estimate summarize(const std::vector<ReplicationResult>& reps,
                          double (*field)(const ReplicationResult&)) {
  const double R = static_cast<double>(reps.size());
  double mean = 0.0;
  for (const auto& r : reps) mean += field(r);
  mean /= R;
  double ss = 0.0;
  for (const auto& r : reps) ss += (field(r) - mean) * (field(r) - mean);
  return {mean, std::sqrt(ss / (R - 1.0) / R)};
}

}  // namespace detail

/// Runs all replications (concurrently when workers allow) and reduces them
/// in replication order, so the report depends only on the config.
inline SimReport run(const SimConfig& cfg, unsigned workers = worker_count()) {
  if (cfg.measured_requests < min_measured_requests) {
    throw Error(ErrorKind::InvalidConfig, "measured_requests must be >= 1000");
  }
  if (cfg.replications < min_replications) {
    throw Error(ErrorKind::InvalidConfig, "replications must be >= 5");
  }
  const Scenario& sc = cfg.scenario;
  window::WindowOptions wopts;
  wopts.prefer_exact = true;
  const SojournEstimate analytic = evaluate(sc, wopts);
  if (analytic.rho >= 1.0) {
    throw Error(ErrorKind::Overloaded, "load " + std::to_string(analytic.rho) +
                                           " >= 1: no steady state to simulate");
  }

  SimReport report;
  report.rho = analytic.rho;
  report.warmup_requests =
      cfg.warmup_requests > 0 ? cfg.warmup_requests : default_warmup(analytic.rho, sc.servers());
  report.replications.resize(static_cast<std::size_t>(cfg.replications));
  parallel_for(
      report.replications.size(),
      [&](std::size_t i) {
        report.replications[i] = detail::run_replication(
            sc, report.warmup_requests, cfg.measured_requests, cfg.master_seed, static_cast<int>(i));
      },
      workers);

  using R = ReplicationResult;
  const auto& reps = report.replications;
  report.mean_sojourn = detail::summarize(reps, [](const R& r) { return r.mean_sojourn; });
  report.mean_wait = detail::summarize(reps, [](const R& r) { return r.mean_wait; });
  report.mean_service = detail::summarize(reps, [](const R& r) { return r.mean_service; });
  report.mean_in_system = detail::summarize(reps, [](const R& r) { return r.mean_in_system; });
  report.throughput = detail::summarize(reps, [](const R& r) { return r.throughput; });
  report.utilization = detail::summarize(reps, [](const R& r) { return r.utilization; });

  const double lambda = sc.arrival_rate();
  std::vector<R> gaps = reps;
  for (auto& g : gaps) g.mean_in_system -= lambda * (g.mean_wait + g.mean_service);
  report.little_gap = detail::summarize(gaps, [](const R& r) { return r.mean_in_system; });
  for (const auto& r : reps) report.requests_completed += r.requests;
  return report;
}

}  // namespace qcs::sim
