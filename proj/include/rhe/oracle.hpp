#pragma once

// Dense reference minimizers for tiny instances (at most 12 cells). They
// share no code with the sparse scaling iteration and exist to certify it.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rhe/cost.hpp"
#include "rhe/energy.hpp"
#include "rhe/solver.hpp"

namespace rhe::oracle {

inline constexpr std::size_t kMaxCells = 12;

/// Row-major n x n plan g_ij.
struct DensePlan {
  std::size_t n = 0;
  std::vector<double> g;

  double& operator()(std::size_t i, std::size_t j) { return g[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return g[i * n + j]; }
};

/// minimize eps KL(g | reference) + sum_j |Q_j| h((I^T g)_j)
/// [subject to g I = r_bar when r_bar is set].
struct DenseProblem {
  std::size_t n = 0;
  std::vector<double> reference;  // row-major; zeros are forbidden entries
  std::vector<double> volumes;
  EnergyModel model = EnergyModel::power(2.0, 0.5);
  double epsilon = 1.0;
  std::optional<std::vector<double>> r_bar;
};

/// xi_ij = exp(-(tau/eps) c_ij), 0 where the cost is absent, computed here
/// from the cost matrix directly.
DenseProblem make_jko_problem(std::span<const double> r_bar, const CostMatrix& cost,
                              const EnergyModel& model, double epsilon, double tau,
                              std::span<const double> volumes);

struct OracleResult {
  DensePlan plan;
  double objective = 0.0;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
};

double dense_objective(const DensePlan& plan, const DenseProblem& problem);

/// Norm (in the |Q_i||Q_j|-weighted inner product) of the objective
/// gradient projected onto the tangent space of the constraint, over
/// supported entries.
double kkt_residual(const DensePlan& plan, const DenseProblem& problem);

/// Projected gradient descent with exact re-projection onto the affine
/// marginal constraint, Barzilai-Borwein trial steps and Armijo halving,
/// run until the projected gradient norm is at most `gradient_tol`.
OracleResult projected_gradient(const DenseProblem& problem, double gradient_tol = 1e-10,
                                std::size_t max_iter = 2'000'000);

/// Mirror descent in exponential coordinates: g <- g exp(-t grad) followed
/// by the KL projection (row rescaling) onto the marginal constraint.
OracleResult mirror_descent(const DenseProblem& problem, double gradient_tol = 1e-10,
                            std::size_t max_iter = 2'000'000);

OracleResult brute_force_jko(std::span<const double> r_bar, const CostMatrix& cost,
                             const EnergyModel& model, double epsilon, double tau,
                             std::span<const double> volumes);

/// g_ij = alpha_i xi_ij beta_j from a scaling state.
DensePlan plan_from_state(const ScalingState& state, const GibbsKernel& kernel);

/// Dense proximal maps, applied to a full plan.
DensePlan dense_prox_marginal(const DensePlan& omega, std::span<const double> r_bar,
                              std::span<const double> volumes);
DensePlan dense_prox_energy(const DensePlan& omega, const EnergyModel& model, double epsilon,
                            std::span<const double> volumes);

/// sum_ij |Q_i||Q_j| |a_ij - b_ij|.
double plan_l1(const DensePlan& a, const DensePlan& b, std::span<const double> volumes);

}  // namespace rhe::oracle
