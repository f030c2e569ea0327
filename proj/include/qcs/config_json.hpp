#pragma once

#include <json.hpp>

#include <set>
#include <string>

#include "qcs/core_model.hpp"
#include "qcs/error.hpp"

// Scenario JSON schema:
//   {"u": int, "L_km": number, "N": int, "k": int, "t_fwd_us": number,
//    "c_km_per_us": number, "t_control_us": number (optional, default 0),
//    "p": {"fixed": number} | {"all_photonic": true},
//    "n": int, "w": int | "inf", "lambda0_per_us": number,
//    "strategy": "sequential" | "parallel"}
// w counts batches, one batch per forwarding time t_fwd_us.
namespace qcs::config {

using json = nlohmann::json;

struct ScenarioInput {
  NetworkConfig network;
  RequestModel request;
  Strategy strategy = Strategy::Sequential;
};

inline const std::set<std::string>& scenario_keys() {
  static const std::set<std::string> keys{"u", "L_km", "N", "k", "t_fwd_us", "c_km_per_us",
                                          "t_control_us", "p", "n", "w", "lambda0_per_us",
                                          "strategy"};
  return keys;
}

namespace detail {

[[noreturn]] inline void bad(const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); }

inline const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) bad(std::string("missing key \"") + key + "\"");
  return *it;
}

inline int integer(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_integer()) bad(std::string("\"") + key + "\" must be an integer");
  return v.get<int>();
}

inline double number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) bad(std::string("\"") + key + "\" must be a number");
  return v.get<double>();
}

}  // namespace detail

inline Window parse_window(const json& v) {
  if (v.is_string()) {
    if (v.get<std::string>() == "inf") return Window::infinite();
    detail::bad("\"w\" must be an integer or \"inf\"");
  }
  if (!v.is_number_integer()) detail::bad("\"w\" must be an integer or \"inf\"");
  return Window::batches(v.get<int>());
}

inline Strategy parse_strategy(const json& v) {
  if (v == "sequential") return Strategy::Sequential;
  if (v == "parallel") return Strategy::Parallel;
  detail::bad("\"strategy\" must be \"sequential\" or \"parallel\"");
}

inline ScenarioInput parse_scenario(const json& j) {
  using namespace detail;
  if (!j.is_object()) bad("scenario must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!scenario_keys().count(key)) bad("unknown key \"" + key + "\"");
  }
  ScenarioInput in;
  in.network.users = integer(j, "u");
  in.network.arm_km = number(j, "L_km");
  in.network.repeaters = integer(j, "N");
  in.network.stations = integer(j, "k");
  in.network.t_fwd_us = number(j, "t_fwd_us");
  in.network.c_km_per_us = number(j, "c_km_per_us");
  in.network.t_control_us = j.contains("t_control_us") ? number(j, "t_control_us") : 0.0;

  const json& p = field(j, "p");
  if (!p.is_object() || p.size() != 1) bad("\"p\" must be {\"fixed\": x} or {\"all_photonic\": true}");
  if (p.contains("fixed")) {
    in.network.success = FixedProbability{number(p, "fixed")};
  } else if (p.contains("all_photonic") && p["all_photonic"] == true) {
    in.network.success = AllPhotonic{};
  } else {
    bad("\"p\" must be {\"fixed\": x} or {\"all_photonic\": true}");
  }

  in.request.packets = integer(j, "n");
  try {
    in.request.window = parse_window(field(j, "w"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidConfig) throw;
    bad("\"w\" must be >= 1 or \"inf\"");
  }
  in.request.lambda0_per_us = number(j, "lambda0_per_us");
  in.strategy = parse_strategy(field(j, "strategy"));
  return in;
}

inline json to_json(const ScenarioInput& in) {
  json j;
  j["u"] = in.network.users;
  j["L_km"] = in.network.arm_km;
  j["N"] = in.network.repeaters;
  j["k"] = in.network.stations;
  j["t_fwd_us"] = in.network.t_fwd_us;
  j["c_km_per_us"] = in.network.c_km_per_us;
  j["t_control_us"] = in.network.t_control_us;
  if (const auto* fixed = std::get_if<FixedProbability>(&in.network.success)) {
    j["p"] = {{"fixed", fixed->p}};
  } else {
    j["p"] = {{"all_photonic", true}};
  }
  j["n"] = in.request.packets;
  if (in.request.window.is_infinite()) j["w"] = "inf";
  else j["w"] = in.request.window.size();
  j["lambda0_per_us"] = in.request.lambda0_per_us;
  j["strategy"] = to_string(in.strategy);
  return j;
}

inline Scenario validate(const ScenarioInput& in) {
  return qcs::validate(in.network, in.request, in.strategy);
}

inline Scenario load_scenario(const json& j) { return validate(parse_scenario(j)); }

}  // namespace qcs::config
