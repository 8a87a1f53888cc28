#pragma once

#include <stdexcept>

#include "edgesim/report.hpp"
#include "edgesim/scenario.hpp"

namespace edgesim {

struct SimRuntimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Runs a scenario to completion. The scenario must validate; identical
/// scenarios and seeds produce byte-identical reports.
MetricsReport run_scenario(const Scenario& scenario);

}  // namespace edgesim
