#pragma once

// Umbrella header.
#include "qcs/capacity.hpp"
#include "qcs/config_json.hpp"
#include "qcs/core_model.hpp"
#include "qcs/dessim.hpp"
#include "qcs/error.hpp"
#include "qcs/experiments.hpp"
#include "qcs/hardware.hpp"
#include "qcs/queueing.hpp"
#include "qcs/random.hpp"
#include "qcs/service_time.hpp"
#include "qcs/window_problem.hpp"
