// qcs: evaluate, sweep and simulate circuit-switched star networks.
//
//   qcs eval scenario.json            one analytic (or simulated) report row
//   qcs figure fig3 [--out f.csv]     figure data grid
//   qcs sweep spec.json               Cartesian sweep over scenario keys
//   qcs simulate scenario.json        discrete-event report
//
// Exit codes: 0 success, 1 internal failure, 2 invalid input, 3 overloaded.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "qcs/qcs.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failure = 1;
constexpr int exit_invalid = 2;
constexpr int exit_overloaded = 3;

using qcs::Error;
using qcs::ErrorKind;
namespace ex = qcs::experiments;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::ordered_json read_json(const std::string& path) {
  try {
    return nlohmann::ordered_json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::InvalidConfig, path + ": " + e.what());
  }
}

void emit(const ex::CsvTable& table, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << table.str();
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw Error(ErrorKind::InvalidConfig, "cannot write " + out);
  f << table.str();
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter:
    case ErrorKind::InfeasibleWindow:
    case ErrorKind::InvalidConfig:
    case ErrorKind::Unsupported:
      return exit_invalid;
    case ErrorKind::Overloaded:
      return exit_overloaded;
    default:
      return exit_failure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Queueing model of quantum circuit switching in star networks"};
  app.require_subcommand(1);

  ex::RunOptions opts;
  std::string method = "auto";
  std::string out;
  std::string input;
  std::string figure_name;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", opts.seed, "master seed")->capture_default_str();
    cmd->add_option("--samples", opts.samples, "Monte Carlo draws per window estimate (0: default)");
    cmd->add_option("--replications", opts.replications, "simulation replications")->capture_default_str();
    cmd->add_option("--measured", opts.measured_requests, "measured requests per replication")
        ->capture_default_str();
    cmd->add_option("--method", method, "analytic | simulate | auto")->capture_default_str();
    cmd->add_flag("--exact-windows", opts.exact_windows, "solve finite windows with the Markov chain");
    cmd->add_option("--out", out, "output CSV path (default stdout)");
  };

  CLI::App* eval = app.add_subcommand("eval", "single-scenario report");
  eval->add_option("scenario", input, "scenario JSON file")->required();
  add_common(eval);

  CLI::App* figure = app.add_subcommand("figure", "figure data grid");
  figure->add_option("name", figure_name, "fig3 fig4a fig4b fig5 fig7 fig8 fig9 fig10 fig11")->required();
  add_common(figure);

  CLI::App* sweep = app.add_subcommand("sweep", "Cartesian parameter sweep");
  sweep->add_option("spec", input, "sweep JSON file")->required();
  add_common(sweep);

  CLI::App* simulate = app.add_subcommand("simulate", "discrete-event simulation report");
  simulate->add_option("scenario", input, "scenario JSON file")->required();
  add_common(simulate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_invalid;
  }

  try {
    opts.method = ex::parse_method(method);

    if (eval->parsed()) {
      const auto in = qcs::config::parse_scenario(nlohmann::json::parse(read_json(input).dump()));
      ex::EvalRow row;
      const ex::CsvTable table = ex::eval_table(in, opts, &row);
      if (row.invalid) throw Error(ErrorKind::InvalidConfig, row.cells.back());
      emit(table, out);
      if (row.overloaded) {
        std::cerr << "qcs: overloaded (rho >= 1)\n";
        return exit_overloaded;
      }
    } else if (figure->parsed()) {
      emit(ex::figure(figure_name, opts), out);
    } else if (sweep->parsed()) {
      const ex::SweepSpec spec = ex::parse_sweep(read_json(input));
      ex::RunOptions sweep_opts = opts;
      if (sweep->count("--seed") == 0 && spec.seed) sweep_opts.seed = *spec.seed;
      if (sweep->count("--method") == 0 && spec.method) sweep_opts.method = *spec.method;
      ex::SweepSpec resolved = spec;
      resolved.seed = sweep_opts.seed;
      resolved.method = sweep_opts.method;
      emit(ex::sweep(resolved, sweep_opts), out.empty() && spec.out ? *spec.out : out);
    } else if (simulate->parsed()) {
      const qcs::Scenario sc =
          qcs::config::load_scenario(nlohmann::json::parse(read_json(input).dump()));
      emit(ex::simulate_table(sc, opts), out);
    }
  } catch (const Error& e) {
    std::cerr << "qcs: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "qcs: " << e.what() << '\n';
    return exit_failure;
  }
  return exit_ok;
}
