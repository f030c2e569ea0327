#pragma once

#include <cmath>

#include "qcs/qcs.hpp"

namespace qcs::testing {

inline Scenario small(int stations, Strategy strat, int users) {
  return config::validate(experiments::small_budget(stations, strat, users));
}

inline Scenario large(double arm_km, int repeaters, Window w, int stations, Strategy strat, int users) {
  return config::validate(experiments::large_budget(arm_km, repeaters, w, stations, strat, users));
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace qcs::testing
