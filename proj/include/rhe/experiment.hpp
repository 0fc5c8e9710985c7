#pragma once

#include <iosfwd>
#include <string>

#include "rhe/config.hpp"
#include "rhe/flow.hpp"
#include "rhe/grid.hpp"

namespace rhe {

/// Grid of the configuration, with obstacles applied.
Grid make_grid(const ExperimentConfig& cfg);

/// Initial density of the configuration on `grid`.
DensityVector make_initial_density(const ExperimentConfig& cfg, const Grid& grid);

struct ExperimentSummary {
  std::size_t steps = 0;
  std::size_t sweeps = 0;
  double wall_seconds = 0.0;
  double max_mass_drift = 0.0;    // max over steps of |mass before renormalization - 1|
  double final_mass_drift = 0.0;
  bool steady = false;
};

/// Runs the configured experiment and writes its files under
/// cfg.output_dir; the trace is appended and flushed step by step so a
/// failing run leaves what it completed. Prints a summary table to `log`.
/// Solver failures propagate as FlowFailure.
ExperimentSummary run_experiment(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace rhe
