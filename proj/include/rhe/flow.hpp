#pragma once

// Time stepping: r^{n+1} is the Y-marginal of the optimal plan for one
// regularized step started at r^n.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rhe/cost.hpp"
#include "rhe/energy.hpp"
#include "rhe/grid.hpp"
#include "rhe/solver.hpp"

namespace rhe {

struct FlowRecord {
  std::size_t n = 0;
  DensityVector density;
  double mass = 1.0;  // before renormalization
  double energy = 0.0;
  SolveReport report;  // empty for n = 0
  std::vector<std::size_t> support;
  double support_radius = 0.0;
  double l1_change = 0.0;  // sum_i |Q_i| |r^n_i - r^{n-1}_i|
};

struct FlowTrace {
  std::vector<FlowRecord> records;
  bool steady = false;
  std::size_t total_sweeps() const noexcept;
};

struct FlowOptions {
  SolverOptions solver;
  /// Reference point of the support radius; the domain center if unset.
  std::optional<Point> anchor;
  bool stop_at_steady = false;
  double steady_tol = 1e-10;
  /// Called after each record is appended, including the initial one.
  std::function<void(const FlowRecord&)> on_record;
  /// Called with the converged scaling state of each step.
  std::function<void(std::size_t, const ScalingState&)> on_state;
};

/// Solver failure during a flow, tagged with the step that failed.
class FlowFailure : public std::runtime_error {
 public:
  FlowFailure(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Builds the kernel once and chains `steps` implicit steps from r0. With
/// stop_at_steady the run ends at the first step whose l1_change is at most
/// steady_tol and the steady flag is set.
FlowTrace run_flow(const Grid& grid, const CostFunction& cost_fn, const EnergyModel& model,
                   double epsilon, double tau, std::size_t steps, const DensityVector& r0,
                   const FlowOptions& options = {});

/// Same, with a prebuilt kernel.
FlowTrace run_flow(const Grid& grid, const GibbsKernel& kernel, const EnergyModel& model,
                   double epsilon, std::size_t steps, const DensityVector& r0,
                   const FlowOptions& options = {});

/// Indices with r_i > 0 exactly.
std::vector<std::size_t> support_set(const DensityVector& r);

/// Largest distance from `anchor` of a center in `support`; 0 if empty.
double support_radius(const Grid& grid, std::span<const std::size_t> support, const Point& anchor);

std::vector<double> energy_series(const FlowTrace& trace);

struct GammaRung {
  double epsilon = 0.0;
  double delta = 0.0;
  std::size_t cells = 0;
  std::vector<double> density;     // on the rung's own mesh
  std::vector<double> prolonged;   // injected into the finest mesh
  SolveReport report;
  bool log_domain = false;
  std::optional<std::string> error;
};

struct GammaProbeResult {
  std::vector<GammaRung> rungs;
  std::vector<double> gaps;      // L1 on the finest mesh between rungs k and k+1; NaN if either failed
  std::vector<double> products;  // epsilon_k * log(1 / delta_k)
};

struct GammaProbeProblem {
  double domain_min = 0.0;
  double domain_max = 1.0;
  Sampler r_bar;
};

/// One step at each rung (epsilon_k, delta_k) on a 1D mesh of width
/// delta_k, compared after injection into the finest mesh. Rungs with
/// epsilon at most `log_domain_below` run in the log domain.
GammaProbeResult gamma_probe(const GammaProbeProblem& problem,
                             std::span<const std::pair<double, double>> ladder, double tau,
                             const EnergyModel& model, const CostFunction& cost_fn = {},
                             const SolverOptions& solver = {}, double log_domain_below = 0.02);

}  // namespace rhe
