#pragma once

// One implicit step of the regularized scheme: minimize
//   eps KL(g | xi) + sum_j |Q_j| h((I^T g)_j)   subject to  g I = r_bar
// over plans g = (alpha ⊗ beta) ⊙ xi by the generalized Dykstra iteration
// in factored form. Even sweeps rescale rows to the marginal constraint,
// odd sweeps apply the energy proximal map column-wise through H_eps^{-1};
// u and v carry the Dykstra corrections.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "rhe/cost.hpp"
#include "rhe/energy.hpp"
#include "rhe/grid.hpp"

namespace rhe {

enum class ScalingDomain { linear, log };

/// Dykstra factors. In the log domain every vector holds logarithms and
/// -inf stands for an exact zero.
struct ScalingState {
  ScalingDomain domain = ScalingDomain::linear;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> u;       // u^(k)
  std::vector<double> v;       // v^(k)
  std::vector<double> u_prev;  // u^(k-1)
  std::vector<double> v_prev;  // v^(k-1)
  std::size_t k = 0;

  /// alpha = beta = u = v = 1.
  static ScalingState initial(std::size_t n, ScalingDomain domain = ScalingDomain::linear);

  std::size_t size() const noexcept { return alpha.size(); }
  /// Linear-scale factor values regardless of domain.
  std::vector<double> linear_alpha() const;
  std::vector<double> linear_beta() const;
  /// Log-scale factor values regardless of domain.
  std::vector<double> log_alpha() const;
  std::vector<double> log_beta() const;
};

struct SolveReport {
  std::size_t iterations = 0;         // sweeps, each one half of an alternation
  double final_change = 0.0;          // max |Δ log α|, |Δ log β| over the last pair
  double x_marginal_residual = 0.0;   // sum_i |Q_i| |(g I)_i - r_bar_i|
  double objective = 0.0;
  double mass_before_renormalization = 0.0;
  bool converged = false;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, SolveReport report)
      : std::runtime_error(what), report_(report) {}
  const SolveReport& report() const noexcept { return report_; }

 private:
  SolveReport report_;
};

struct SolverOptions {
  double tol = 1e-8;
  std::size_t max_iter = 10000;
  bool log_domain = false;
};

/// Linear-scale plan factors for the standalone proximal maps.
struct PlanFactors {
  std::vector<double> alpha;
  std::vector<double> beta;
};

/// Energy proximal map: scales column j by H^{-1}(s_j) / s_j with
/// s = I^T ω the column sums; zero columns stay zero.
PlanFactors prox_energy(const PlanFactors& omega, const GibbsKernel& kernel,
                        const EnergyModel& model, double epsilon, std::span<const double> volumes);

/// Marginal proximal map: rescales rows so that g I = r_bar exactly.
PlanFactors prox_marginal(const PlanFactors& omega, const GibbsKernel& kernel,
                          std::span<const double> r_bar, std::span<const double> volumes);

/// X- and Y-marginals of the plan represented by the state.
struct Marginals {
  std::vector<double> row;  // (g I)_i = sum_j |Q_j| g_ij
  std::vector<double> col;  // (I^T g)_j = sum_i |Q_i| g_ij
};
Marginals plan_marginals(const ScalingState& state, const GibbsKernel& kernel,
                         std::span<const double> volumes);

/// Sweep driver with preallocated buffers; one instance per solve.
class DykstraIteration {
 public:
  DykstraIteration(const GibbsKernel& kernel, const EnergyModel& model, double epsilon,
                   std::span<const double> r_bar, std::span<const double> volumes);

  /// Applies one sweep: marginal if state.k is even, energy if odd.
  void step(ScalingState& state);

 private:
  void marginal_linear(ScalingState& s);
  void energy_linear(ScalingState& s);
  void marginal_log(ScalingState& s);
  void energy_log(ScalingState& s);

  const GibbsKernel& kernel_;
  const EnergyModel& model_;
  double epsilon_;
  std::span<const double> r_bar_;
  std::span<const double> volumes_;
  std::vector<double> log_volumes_;
  std::vector<double> work_;
  std::vector<double> kx_;
  std::vector<double> next_;
};

void dykstra_step(ScalingState& state, const GibbsKernel& kernel, std::span<const double> r_bar,
                  const EnergyModel& model, double epsilon, std::span<const double> volumes);

/// eps KL(g | xi) + sum_j |Q_j| h((I^T g)_j) at the plan of the state; the
/// marginal constraint is not folded in.
double objective_value(const ScalingState& state, const GibbsKernel& kernel,
                       const EnergyModel& model, double epsilon, std::span<const double> volumes);

struct JkoResult {
  DensityVector r_next;
  ScalingState state;
  SolveReport report;
};

/// Iterates sweeps until the log-factor change over a full pair is at most
/// tol, then finishes with one marginal sweep so the returned plan carries
/// r_prev exactly as X-marginal. The Y-marginal is renormalized to unit mass.
JkoResult jko_step(const Grid& grid, const DensityVector& r_prev, const GibbsKernel& kernel,
                   const EnergyModel& model, double epsilon, const SolverOptions& options = {});

}  // namespace rhe
