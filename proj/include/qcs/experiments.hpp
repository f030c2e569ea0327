#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qcs/capacity.hpp"
#include "qcs/config_json.hpp"
#include "qcs/core_model.hpp"
#include "qcs/dessim.hpp"
#include "qcs/error.hpp"
#include "qcs/hardware.hpp"
#include "qcs/queueing.hpp"
#include "qcs/random.hpp"
#include "qcs/window_problem.hpp"

// Experiment driver shared by the command-line tool and the test suites:
// single-scenario reports, figure grids and Cartesian sweeps, all rendered as
// CSV. Unbounded values print as "inf", undefined ones as "na".
namespace qcs::experiments {

using config::ScenarioInput;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// CSV

inline std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "na";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "inf"; }

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) {
      throw Error(ErrorKind::InvalidParameter, "CSV row width does not match header");
    }
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (header_[i] == name) return i;
    }
    throw Error(ErrorKind::InvalidParameter, "no CSV column " + name);
  }

  std::string str() const {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << escape(cells[i]);
      }
      os << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return os.str();
  }

 private:
  static std::string escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + '"';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// ---------------------------------------------------------------------------
// Options and default scenarios

enum class Method { Analytic, Simulate, Auto };

inline Method parse_method(const std::string& s) {
  if (s == "analytic") return Method::Analytic;
  if (s == "simulate") return Method::Simulate;
  if (s == "auto") return Method::Auto;
  throw Error(ErrorKind::InvalidConfig, "method must be analytic, simulate or auto");
}

struct RunOptions {
  Method method = Method::Auto;
  std::uint64_t seed = 1;
  /// Monte Carlo draws per window-moment estimate; 0 picks the figure default.
  std::uint64_t samples = 0;
  int replications = 10;
  std::uint64_t measured_requests = 10'000;
  /// Solve finite windows with the Markov chain instead of sampling.
  bool exact_windows = false;

  std::uint64_t samples_or(std::uint64_t fallback) const { return samples ? samples : fallback; }

  window::WindowOptions window_options(std::uint64_t default_samples = 100'000) const {
    window::WindowOptions w;
    w.prefer_exact = exact_windows;
    w.samples = samples_or(default_samples);
    w.seed = seed;
    return w;
  }
};

inline constexpr int default_packets = 7;
inline constexpr double default_lambda0 = 1e-4;
inline constexpr double default_t_fwd = 100.0;
inline constexpr double default_c = 0.2;

/// Near-deterministic short-range stations: p = 1, N = 0, L = 1 km, w = 10.
inline ScenarioInput small_budget(int stations, Strategy strat, int users = 2) {
  ScenarioInput in;
  in.network.users = users;
  in.network.arm_km = 1.0;
  in.network.repeaters = 0;
  in.network.stations = stations;
  in.network.t_fwd_us = default_t_fwd;
  in.network.c_km_per_us = default_c;
  in.network.success = FixedProbability{1.0};
  in.request.packets = default_packets;
  in.request.window = Window::batches(10);
  in.request.lambda0_per_us = default_lambda0;
  in.strategy = strat;
  return in;
}

/// All-photonic stations with p from the hardware model.
inline ScenarioInput large_budget(double arm_km, int repeaters, Window w, int stations,
                                  Strategy strat, int users = 2) {
  ScenarioInput in = small_budget(stations, strat, users);
  in.network.arm_km = arm_km;
  in.network.repeaters = repeaters;
  in.network.success = AllPhotonic{};
  in.request.window = w;
  return in;
}

// ---------------------------------------------------------------------------
// Single-scenario report

inline std::vector<std::string> eval_header() {
  return {"strategy", "u",        "k",       "N",          "L_km",        "n",
          "w",        "lambda_per_us", "m",  "s",          "p",           "EB",
          "EB_se",    "ET_service_us", "c2_service", "rho", "wait_us",    "mst_us",
          "mst_se_us", "u_crit",  "window_method", "wait_method", "error"};
}

struct EvalRow {
  std::vector<std::string> cells;
  bool invalid = false;
  bool overloaded = false;
};

inline EvalRow invalid_row(const ScenarioInput& in, const std::string& message) {
  EvalRow row;
  row.invalid = true;
  row.cells.assign(eval_header().size(), "na");
  row.cells[0] = to_string(in.strategy);
  row.cells[1] = std::to_string(in.network.users);
  row.cells[2] = std::to_string(in.network.stations);
  row.cells[3] = std::to_string(in.network.repeaters);
  row.cells[4] = fmt(in.network.arm_km);
  row.cells[5] = std::to_string(in.request.packets);
  row.cells[6] = in.request.window.str();
  row.cells.back() = message;
  return row;
}

/// One report row. Auto and Analytic use the routed formulas (exact M/G/1 or
/// Lee-Longton with closed-form, series or sampled window moments);
/// Simulate replaces wait and sojourn with discrete-event estimates.
inline EvalRow eval_row(const ScenarioInput& in, const RunOptions& opts, window::MomentCache& cache) {
  std::optional<Scenario> maybe;
  try {
    maybe = config::validate(in);
  } catch (const Error& e) {
    return invalid_row(in, e.what());
  }
  const Scenario& sc = *maybe;
  const SojournEstimate est = evaluate(sc, cache);
  const CapacityResult crit = u_crit(sc, cache);

  std::string wait = fmt(est.wait.mean_wait);
  std::string mst = fmt(est.mean_sojourn);
  std::string mst_se = est.stable() ? fmt(est.mean_sojourn_se) : "na";
  std::string wait_method = to_string(est.wait.method);
  std::string error;

  if (!est.stable()) {
    error = "overloaded";
  } else if (opts.method == Method::Simulate) {
    sim::SimConfig cfg{sc};
    cfg.measured_requests = opts.measured_requests;
    cfg.replications = opts.replications;
    cfg.master_seed = opts.seed;
    const sim::SimReport rep = sim::run(cfg, 1);
    wait = fmt(rep.mean_wait.mean);
    mst = fmt(rep.mean_sojourn.mean);
    mst_se = fmt(rep.mean_sojourn.se);
    wait_method = to_string(WaitMethod::Simulated);
  }

  EvalRow row;
  row.overloaded = !est.stable();
  row.cells = {to_string(sc.strategy()),
               std::to_string(sc.network().users),
               std::to_string(sc.network().stations),
               std::to_string(sc.network().repeaters),
               fmt(sc.network().arm_km),
               std::to_string(sc.request().packets),
               sc.request().window.str(),
               fmt(sc.arrival_rate()),
               std::to_string(sc.batch()),
               std::to_string(sc.servers()),
               fmt(sc.success_probability()),
               fmt(est.window.moments.m1),
               fmt(est.window.se_m1),
               fmt(est.service.m1),
               fmt(c2_service(est.service)),
               fmt(est.rho),
               wait,
               mst,
               mst_se,
               fmt(crit.value),
               window::to_string(est.window.method),
               wait_method,
               error};
  return row;
}

inline CsvTable eval_table(const ScenarioInput& in, const RunOptions& opts, EvalRow* out = nullptr) {
  window::MomentCache cache(opts.window_options());
  EvalRow row = eval_row(in, opts, cache);
  CsvTable table(eval_header());
  table.add(row.cells);
  if (out) *out = std::move(row);
  return table;
}

/// Discrete-event report for the `simulate` command.
inline CsvTable simulate_table(const Scenario& sc, const RunOptions& opts) {
  sim::SimConfig cfg{sc};
  cfg.measured_requests = opts.measured_requests;
  cfg.replications = opts.replications;
  cfg.master_seed = opts.seed;
  const sim::SimReport rep = sim::run(cfg);
  window::WindowOptions wopts = opts.window_options();
  wopts.prefer_exact = true;
  const SojournEstimate analytic = evaluate(sc, wopts);

  CsvTable table({"strategy", "u", "k", "rho", "replications", "measured_requests", "warmup_requests",
                  "mst_us", "mst_se_us", "wait_us", "wait_se_us", "service_us", "service_se_us",
                  "in_system", "in_system_se", "little_gap", "little_gap_se", "throughput_per_us",
                  "throughput_se", "utilization", "analytic_wait_us", "analytic_mst_us",
                  "analytic_wait_method"});
  table.add({to_string(sc.strategy()), std::to_string(sc.network().users),
             std::to_string(sc.network().stations), fmt(rep.rho), std::to_string(cfg.replications),
             std::to_string(cfg.measured_requests), std::to_string(rep.warmup_requests),
             fmt(rep.mean_sojourn.mean), fmt(rep.mean_sojourn.se), fmt(rep.mean_wait.mean),
             fmt(rep.mean_wait.se), fmt(rep.mean_service.mean), fmt(rep.mean_service.se),
             fmt(rep.mean_in_system.mean), fmt(rep.mean_in_system.se), fmt(rep.little_gap.mean),
             fmt(rep.little_gap.se), fmt(rep.throughput.mean), fmt(rep.throughput.se),
             fmt(rep.utilization.mean), fmt(analytic.wait.mean_wait), fmt(analytic.mean_sojourn),
             to_string(analytic.wait.method)});
  return table;
}

// ---------------------------------------------------------------------------
// Sequential-versus-parallel comparison cells

enum class Region { SeqBetter, ParBetter, SeqOnly, ParOnly, None };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::SeqBetter: return "seq_better";
    case Region::ParBetter: return "par_better";
    case Region::SeqOnly: return "s_only";
    case Region::ParOnly: return "p_only";
    case Region::None: return "none";
  }
  return "none";
}

struct Comparison {
  SojournEstimate sequential;
  SojournEstimate parallel;
  Region region = Region::None;
  /// (MST_seq - MST_par) / MST_par when both are finite.
  std::optional<double> rel_diff;
  double rel_diff_se = 0.0;
};

inline Region classify(const SojournEstimate& seq, const SojournEstimate& par) {
  if (seq.stable() && par.stable()) {
    return *seq.mean_sojourn < *par.mean_sojourn ? Region::SeqBetter : Region::ParBetter;
  }
  if (seq.stable()) return Region::SeqOnly;
  if (par.stable()) return Region::ParOnly;
  return Region::None;
}

inline Comparison compare(const ScenarioInput& base, window::MomentCache& cache) {
  ScenarioInput seq_in = base;
  seq_in.strategy = Strategy::Sequential;
  ScenarioInput par_in = base;
  par_in.strategy = Strategy::Parallel;

  Comparison c;
  c.sequential = evaluate(config::validate(seq_in), cache);
  c.parallel = evaluate(config::validate(par_in), cache);
  c.region = classify(c.sequential, c.parallel);
  if (c.sequential.stable() && c.parallel.stable()) {
    const double s = *c.sequential.mean_sojourn;
    const double p = *c.parallel.mean_sojourn;
    c.rel_diff = (s - p) / p;
    const double ds = c.sequential.mean_sojourn_se / p;
    const double dp = s * c.parallel.mean_sojourn_se / (p * p);
    c.rel_diff_se = std::sqrt(ds * ds + dp * dp);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Figures

inline const std::vector<std::string>& figure_names() {
  static const std::vector<std::string> names{"fig3", "fig4a", "fig4b", "fig5", "fig7",
                                              "fig8", "fig9",  "fig10", "fig11"};
  return names;
}

/// Critical users vs stations, small budget.
inline CsvTable fig3(const RunOptions& opts) {
  window::MomentCache cache(opts.window_options());
  CsvTable t({"k", "strategy", "u_crit"});
  for (int k = 1; k <= 15; ++k) {
    for (Strategy s : {Strategy::Sequential, Strategy::Parallel}) {
      const CapacityResult r = u_crit(config::validate(small_budget(k, s)), cache);
      t.add({std::to_string(k), to_string(s), fmt(r.value)});
    }
  }
  return t;
}

inline std::vector<std::string> heatmap_header(bool with_panel) {
  std::vector<std::string> h;
  if (with_panel) h = {"N", "L_km", "w"};
  for (const char* c : {"u", "k", "mst_seq_us", "mst_seq_se_us", "mst_par_us", "mst_par_se_us",
                        "rel_diff", "rel_diff_se", "region"}) {
    h.emplace_back(c);
  }
  return h;
}

inline std::vector<std::string> heatmap_cells(int users, int stations, const Comparison& c) {
  return {std::to_string(users),
          std::to_string(stations),
          fmt(c.sequential.mean_sojourn),
          c.sequential.stable() ? fmt(c.sequential.mean_sojourn_se) : "na",
          fmt(c.parallel.mean_sojourn),
          c.parallel.stable() ? fmt(c.parallel.mean_sojourn_se) : "na",
          c.rel_diff ? fmt(*c.rel_diff) : "na",
          c.rel_diff ? fmt(c.rel_diff_se) : "na",
          to_string(c.region)};
}

/// u in [2, 20] x k in [1, 15] grid of comparisons built from make(u, k).
inline CsvTable heatmap(const std::function<ScenarioInput(int, int)>& make, window::MomentCache& cache,
                        const std::vector<std::string>& prefix = {}) {
  constexpr int u_lo = 2, u_hi = 20, k_lo = 1, k_hi = 15;
  const std::size_t cols = k_hi - k_lo + 1;
  const std::size_t cells = static_cast<std::size_t>(u_hi - u_lo + 1) * cols;
  std::vector<Comparison> results(cells);
  parallel_for(cells, [&](std::size_t i) {
    const int u = u_lo + static_cast<int>(i / cols);
    const int k = k_lo + static_cast<int>(i % cols);
    results[i] = compare(make(u, k), cache);
  });
  CsvTable t(heatmap_header(!prefix.empty()));
  for (std::size_t i = 0; i < cells; ++i) {
    std::vector<std::string> row = prefix;
    const auto body = heatmap_cells(u_lo + static_cast<int>(i / cols), k_lo + static_cast<int>(i % cols),
                                    results[i]);
    row.insert(row.end(), body.begin(), body.end());
    t.add(std::move(row));
  }
  return t;
}

inline CsvTable fig4a(const RunOptions& opts) {
  window::MomentCache cache(opts.window_options());
  return heatmap([](int u, int k) { return small_budget(k, Strategy::Sequential, u); }, cache);
}

/// Large budget, L = 7.5 km, N = 0, w = 8 batches; default 1e5 draws.
inline CsvTable fig4b(const RunOptions& opts) {
  window::MomentCache cache(opts.window_options(100'000));
  return heatmap(
      [](int u, int k) { return large_budget(7.5, 0, Window::batches(8), k, Strategy::Sequential, u); },
      cache);
}

inline const std::vector<int>& lcrit_repeater_counts() {
  static const std::vector<int> counts{0, 1, 2, 5, 10};
  return counts;
}

inline CsvTable lcrit_table(const std::vector<Strategy>& strategies, const RunOptions& opts) {
  window::MomentCache cache(opts.window_options());
  CsvTable t({"strategy", "N", "u", "L_crit", "bound_km", "residual_load", "maxed_out"});
  for (Strategy s : strategies) {
    for (int N : lcrit_repeater_counts()) {
      ScenarioInput in = large_budget(1.0, N, Window::infinite(), 12, s, 2);
      const Scenario sc = config::validate(in);
      for (int u = 2; u <= 20; ++u) {
        const CapacityResult r = l_crit(sc, u, cache);
        const double bound = in.network.c_km_per_us * in.network.stations /
                             (in.request.lambda0_per_us * u * (u - 1.0) * sc.batch());
        t.add({to_string(s), std::to_string(N), std::to_string(u), fmt(r.value), fmt(bound),
               fmt(r.residual_load), r.maxed_out ? "1" : "0"});
      }
    }
  }
  return t;
}

/// Critical distance vs users, sequential, k = 12, w infinite.
inline CsvTable fig5(const RunOptions& opts) { return lcrit_table({Strategy::Sequential}, opts); }

/// Same for both strategies.
inline CsvTable fig11(const RunOptions& opts) {
  return lcrit_table({Strategy::Sequential, Strategy::Parallel}, opts);
}

struct C2Point {
  std::string panel;
  int n;
  Window w;
  double p;
  int m;
};

/// Regimes of the window SCV study: (a) n=7, m=3 over p and w; (b) n=7,
/// p=0.7 over m and w; (c) p=0.7, m=3 over n and w; (d) m=1 over n, p, w.
inline std::vector<C2Point> c2_grid() {
  std::vector<C2Point> pts;
  const Window inf = Window::infinite();
  for (double p : {0.5, 0.6, 0.7, 0.8, 0.9, 0.95}) {
    for (Window w : {Window::batches(7), Window::batches(8), Window::batches(10), inf}) {
      pts.push_back({"a", 7, w, p, 3});
    }
  }
  for (int m = 1; m <= 6; ++m) {
    for (Window w : {Window::batches(7), Window::batches(8), Window::batches(10), inf}) {
      pts.push_back({"b", 7, w, 0.7, m});
    }
  }
  for (int n = 1; n <= 10; ++n) {
    for (Window w : {Window::batches(n), Window::batches(n + 1), Window::batches(n + 3), inf}) {
      pts.push_back({"c", n, w, 0.7, 3});
    }
  }
  for (double p : {0.7, 0.8, 0.9}) {
    for (int n = 1; n <= 10; ++n) {
      for (Window w : {Window::batches(n), Window::batches(n + 1), Window::batches(n + 3), inf}) {
        pts.push_back({"d", n, w, p, 1});
      }
    }
  }
  return pts;
}

/// SCV of B from sampled moments with a delta-method standard error.
struct C2Estimate {
  double c2 = 0.0;
  double se = 0.0;
};

inline C2Estimate estimate_c2(const window::WindowSpec& spec, std::uint64_t samples, std::uint64_t seed) {
  const window::MomentEstimate e = window::sample_moments(spec, samples, seed, 1);
  const double m1 = e.moments.m1;
  const double m2 = e.moments.m2;
  const double g1 = -2.0 * m2 / (m1 * m1 * m1);
  const double g2 = 1.0 / (m1 * m1);
  const double var = g1 * g1 * e.se_m1 * e.se_m1 + g2 * g2 * e.se_m2 * e.se_m2 + 2.0 * g1 * g2 * e.cov_m1_m2;
  return {m2 / (m1 * m1) - 1.0, std::sqrt(std::max(0.0, var))};
}

/// Default 1e4 draws per point.
inline CsvTable fig7(const RunOptions& opts) {
  const auto grid = c2_grid();
  const std::uint64_t samples = opts.samples_or(10'000);
  std::vector<C2Estimate> out(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const auto& g = grid[i];
    out[i] = estimate_c2(window::make_spec(g.n, g.w, g.p, g.m), samples, derive_seed(opts.seed, i));
  });
  CsvTable t({"panel", "n", "w", "p", "m", "c2", "c2_se", "samples"});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& g = grid[i];
    t.add({g.panel, std::to_string(g.n), g.w.str(), fmt(g.p), std::to_string(g.m), fmt(out[i].c2),
           fmt(out[i].se), std::to_string(samples)});
  }
  return t;
}

struct BudgetGeometry {
  int repeaters;
  double arm_km;
};

inline const std::vector<BudgetGeometry>& large_budget_geometries() {
  static const std::vector<BudgetGeometry> g{{0, 7.5}, {1, 13.0}, {5, 30.0}};
  return g;
}

inline const std::vector<Window>& large_budget_windows() {
  static const std::vector<Window> w{Window::infinite(), Window::batches(10), Window::batches(8),
                                     Window::batches(7)};
  return w;
}

/// Critical users vs stations with all-photonic stations; default 1e5 draws.
inline CsvTable fig8(const RunOptions& opts) {
  window::MomentCache cache(opts.window_options(100'000));
  CsvTable t({"N", "L_km", "w", "k", "strategy", "p", "u_crit", "window_method"});
  for (const auto& geo : large_budget_geometries()) {
    for (Window w : large_budget_windows()) {
      for (int k = 1; k <= 15; ++k) {
        for (Strategy s : {Strategy::Sequential, Strategy::Parallel}) {
          ScenarioInput in = large_budget(geo.arm_km, geo.repeaters, w, k, s);
          std::optional<Scenario> sc;
          try {
            sc = config::validate(in);
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::InfeasibleWindow) throw;
            t.add({std::to_string(geo.repeaters), fmt(geo.arm_km), w.str(), std::to_string(k),
                   to_string(s), "na", "0", "infeasible"});
            continue;
          }
          const CapacityResult r = u_crit(*sc, cache);
          const auto method = cache.get(window::window_spec(*sc)).method;
          t.add({std::to_string(geo.repeaters), fmt(geo.arm_km), w.str(), std::to_string(k),
                 to_string(s), fmt(sc->success_probability()), fmt(r.value), window::to_string(method)});
        }
      }
    }
  }
  return t;
}

/// Loads above this are not simulated in fig9; the transient grows as
/// 1/(1 - rho) and the desk-scale budget cannot resolve it.
inline constexpr double fig9_simulation_load_cap = 0.9;

/// MST vs users: (a) small budget, k = 7; (b) large budget, L = 7.5 km,
/// w = 8, k = 2, with discrete-event estimates where rho <= 0.9.
inline CsvTable fig9(const RunOptions& opts) {
  CsvTable t({"panel", "u", "strategy", "rho", "mst_us", "mst_se_us", "sim_mst_us", "sim_mst_se_us"});
  struct Panel {
    std::string name;
    std::function<ScenarioInput(int, Strategy)> make;
    int u_hi;
    bool simulate;
  };
  const std::vector<Panel> panels{
      {"a", [](int u, Strategy s) { return small_budget(7, s, u); }, 15, false},
      {"b", [](int u, Strategy s) { return large_budget(7.5, 0, Window::batches(8), 2, s, u); }, 7, true}};
  window::MomentCache cache(opts.window_options(100'000));
  for (const auto& panel : panels) {
    for (int u = 2; u <= panel.u_hi; ++u) {
      for (Strategy s : {Strategy::Sequential, Strategy::Parallel}) {
        const Scenario sc = config::validate(panel.make(u, s));
        const SojournEstimate est = evaluate(sc, cache);
        std::string sim_mst = "na", sim_se = "na";
        if (panel.simulate && est.stable() && est.rho <= fig9_simulation_load_cap) {
          sim::SimConfig cfg{sc};
          cfg.replications = opts.replications;
          cfg.measured_requests = opts.measured_requests;
          cfg.master_seed = opts.seed;
          const sim::SimReport rep = sim::run(cfg);
          sim_mst = fmt(rep.mean_sojourn.mean);
          sim_se = fmt(rep.mean_sojourn.se);
        }
        t.add({panel.name, std::to_string(u), to_string(s), fmt(est.rho), fmt(est.mean_sojourn),
               est.stable() ? fmt(est.mean_sojourn_se) : "na", sim_mst, sim_se});
      }
    }
  }
  return t;
}

/// Comparison heatmaps for every large-budget geometry and window; default
/// 1e4 draws per window-moment estimate.
inline CsvTable fig10(const RunOptions& opts) {
  window::MomentCache cache(opts.window_options(10'000));
  CsvTable all(heatmap_header(true));
  for (const auto& geo : large_budget_geometries()) {
    for (Window w : large_budget_windows()) {
      const CsvTable part = heatmap(
          [&](int u, int k) { return large_budget(geo.arm_km, geo.repeaters, w, k, Strategy::Sequential, u); },
          cache, {std::to_string(geo.repeaters), fmt(geo.arm_km), w.str()});
      for (const auto& row : part.rows()) all.add(row);
    }
  }
  return all;
}

inline CsvTable figure(const std::string& name, const RunOptions& opts) {
  if (name == "fig3") return fig3(opts);
  if (name == "fig4a") return fig4a(opts);
  if (name == "fig4b") return fig4b(opts);
  if (name == "fig5") return fig5(opts);
  if (name == "fig7") return fig7(opts);
  if (name == "fig8") return fig8(opts);
  if (name == "fig9") return fig9(opts);
  if (name == "fig10") return fig10(opts);
  if (name == "fig11") return fig11(opts);
  throw Error(ErrorKind::InvalidConfig, "unknown figure \"" + name + "\"");
}

// ---------------------------------------------------------------------------
// Sweeps

inline constexpr std::size_t max_sweep_points = 1'000'000;

struct SweepSpec {
  json base;
  std::vector<std::pair<std::string, std::vector<json>>> axes;
  std::optional<Method> method;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

inline std::vector<json> parse_axis(const std::string& key, const nlohmann::ordered_json& v) {
  std::vector<json> values;
  if (v.is_array()) {
    for (const auto& x : v) values.push_back(json::parse(x.dump()));
  } else if (v.is_object() && v.contains("from") && v.contains("to")) {
    if (!v["from"].is_number_integer() || !v["to"].is_number_integer()) {
      throw Error(ErrorKind::InvalidConfig, "axis \"" + key + "\" range bounds must be integers");
    }
    const long from = v["from"].get<long>();
    const long to = v["to"].get<long>();
    const long step = v.contains("step") ? v["step"].get<long>() : 1;
    if (step <= 0 || to < from) throw Error(ErrorKind::InvalidConfig, "axis \"" + key + "\" has an empty range");
    for (long x = from; x <= to; x += step) values.emplace_back(x);
  } else {
    throw Error(ErrorKind::InvalidConfig, "axis \"" + key + "\" must be a list or {from, to[, step]}");
  }
  if (values.empty()) throw Error(ErrorKind::InvalidConfig, "axis \"" + key + "\" is empty");
  return values;
}

/// {"base": scenario, "axes": {key: [values] | {"from", "to", "step"}},
///  "method": "analytic" | "simulate" | "auto", "seed": int, "out": path};
/// axes keep file order and the last axis varies fastest.
inline SweepSpec parse_sweep(const nlohmann::ordered_json& j) {
  if (!j.is_object() || !j.contains("base")) throw Error(ErrorKind::InvalidConfig, "sweep needs \"base\"");
  for (const auto& [key, _] : j.items()) {
    if (key != "base" && key != "axes" && key != "method" && key != "seed" && key != "out") {
      throw Error(ErrorKind::InvalidConfig, "unknown sweep key \"" + key + "\"");
    }
  }
  SweepSpec spec;
  spec.base = json::parse(j["base"].dump());
  config::parse_scenario(spec.base);
  std::size_t points = 1;
  if (j.contains("axes")) {
    if (!j["axes"].is_object()) throw Error(ErrorKind::InvalidConfig, "\"axes\" must be an object");
    for (const auto& [key, value] : j["axes"].items()) {
      if (!config::scenario_keys().count(key) || key == "p") {
        throw Error(ErrorKind::InvalidConfig, "axis \"" + key + "\" is not a sweepable scenario key");
      }
      spec.axes.emplace_back(key, parse_axis(key, value));
      points *= spec.axes.back().second.size();
      if (points > max_sweep_points) throw Error(ErrorKind::InvalidConfig, "sweep grid exceeds 1e6 points");
    }
  }
  if (j.contains("method")) {
    if (!j["method"].is_string()) throw Error(ErrorKind::InvalidConfig, "\"method\" must be a string");
    spec.method = parse_method(j["method"].get<std::string>());
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw Error(ErrorKind::InvalidConfig, "\"seed\" must be a non-negative integer");
    spec.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("out")) {
    if (!j["out"].is_string()) throw Error(ErrorKind::InvalidConfig, "\"out\" must be a string");
    spec.out = j["out"].get<std::string>();
  }
  return spec;
}

inline std::string axis_cell(const json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

/// Cartesian sweep; a point that fails validation gets an error message in
/// the last column instead of aborting. Rows follow grid order.
inline CsvTable sweep(const SweepSpec& spec, RunOptions opts) {
  if (spec.method) opts.method = *spec.method;
  if (spec.seed) opts.seed = *spec.seed;
  std::size_t points = 1;
  for (const auto& axis : spec.axes) points *= axis.second.size();

  std::vector<json> scenarios(points, spec.base);
  std::vector<std::vector<std::string>> prefixes(points);
  for (std::size_t i = 0; i < points; ++i) {
    std::size_t rem = i;
    for (std::size_t a = spec.axes.size(); a-- > 0;) {
      const auto& [key, values] = spec.axes[a];
      const json& v = values[rem % values.size()];
      rem /= values.size();
      scenarios[i][key] = v;
      prefixes[i].insert(prefixes[i].begin(), axis_cell(v));
    }
  }

  window::MomentCache cache(opts.window_options());
  std::vector<EvalRow> rows(points);
  parallel_for(points, [&](std::size_t i) {
    ScenarioInput in;
    try {
      in = config::parse_scenario(scenarios[i]);
    } catch (const Error& e) {
      rows[i] = invalid_row(config::parse_scenario(spec.base), e.what());
      return;
    }
    rows[i] = eval_row(in, opts, cache);
  });

  std::vector<std::string> header;
  for (const auto& axis : spec.axes) header.push_back("axis_" + axis.first);
  const auto eh = eval_header();
  header.insert(header.end(), eh.begin(), eh.end());
  CsvTable t(header);
  for (std::size_t i = 0; i < points; ++i) {
    std::vector<std::string> row = prefixes[i];
    row.insert(row.end(), rows[i].cells.begin(), rows[i].cells.end());
    t.add(std::move(row));
  }
  return t;
}

}  // namespace qcs::experiments
