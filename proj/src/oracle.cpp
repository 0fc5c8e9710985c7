#include "rhe/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rhe/errors.hpp"

namespace rhe::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool supported(const DenseProblem& p, std::size_t i, std::size_t j) {
  if (p.reference[i * p.n + j] <= 0.0) return false;
  return !p.r_bar || (*p.r_bar)[i] > 0.0;
}

std::vector<double> column_sums(const DensePlan& plan, std::span<const double> volumes) {
  std::vector<double> s(plan.n, 0.0);
  for (std::size_t i = 0; i < plan.n; ++i) {
    for (std::size_t j = 0; j < plan.n; ++j) s[j] += volumes[i] * plan(i, j);
  }
  return s;
}

// Riesz gradient in the weighted inner product, projected onto the tangent
// space of the row constraint. Unsupported entries carry 0.
std::vector<double> projected_gradient_of(const DensePlan& plan, const DenseProblem& p) {
  const std::size_t n = p.n;
  const std::vector<double> s = column_sums(plan, p.volumes);
  std::vector<double> grad(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    double weight = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!supported(p, i, j)) continue;
      const double gij = plan(i, j);
      const double v = p.epsilon * std::log(gij / p.reference[i * n + j]) + p.model.h_prime(s[j]);
      grad[i * n + j] = v;
      mean += p.volumes[j] * v;
      weight += p.volumes[j];
    }
    if (p.r_bar && weight > 0.0) {
      mean /= weight;
      for (std::size_t j = 0; j < n; ++j) {
        if (supported(p, i, j)) grad[i * n + j] -= mean;
      }
    }
  }
  return grad;
}

double weighted_dot(std::span<const double> a, std::span<const double> b,
                    std::span<const double> volumes) {
  const std::size_t n = volumes.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) s += volumes[i] * volumes[j] * a[i * n + j] * b[i * n + j];
  }
  return s;
}

void project_rows_affine(DensePlan& plan, const DenseProblem& p) {
  if (!p.r_bar) return;
  for (std::size_t i = 0; i < p.n; ++i) {
    double mass = 0.0;
    double weight = 0.0;
    for (std::size_t j = 0; j < p.n; ++j) {
      if (!supported(p, i, j)) continue;
      mass += p.volumes[j] * plan(i, j);
      weight += p.volumes[j];
    }
    if (weight == 0.0) continue;
    const double shift = ((*p.r_bar)[i] - mass) / weight;
    for (std::size_t j = 0; j < p.n; ++j) {
      if (supported(p, i, j)) plan(i, j) += shift;
    }
  }
}

void rescale_rows(DensePlan& plan, const DenseProblem& p) {
  if (!p.r_bar) return;
  for (std::size_t i = 0; i < p.n; ++i) {
    double mass = 0.0;
    for (std::size_t j = 0; j < p.n; ++j) mass += p.volumes[j] * plan(i, j);
    const double target = (*p.r_bar)[i];
    for (std::size_t j = 0; j < p.n; ++j) plan(i, j) = mass > 0.0 ? plan(i, j) * target / mass : 0.0;
  }
}

DensePlan initial_plan(const DenseProblem& p) {
  if (p.n == 0 || p.n > kMaxCells) throw InvalidArgument("oracle: instance must have 1..12 cells");
  if (p.reference.size() != p.n * p.n || p.volumes.size() != p.n) {
    throw InvalidArgument("oracle: shape mismatch");
  }
  DensePlan plan{p.n, std::vector<double>(p.n * p.n, 0.0)};
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t j = 0; j < p.n; ++j) {
      if (supported(p, i, j)) plan(i, j) = p.reference[i * p.n + j];
    }
  }
  if (p.r_bar) {
    for (std::size_t i = 0; i < p.n; ++i) {
      double mass = 0.0;
      for (std::size_t j = 0; j < p.n; ++j) mass += p.volumes[j] * plan(i, j);
      if ((*p.r_bar)[i] > 0.0 && mass == 0.0) {
        throw InfeasibleError("oracle: positive mass on a row without admissible entries");
      }
    }
    rescale_rows(plan, p);
  }
  return plan;
}

bool positive_on_support(const DensePlan& plan, const DenseProblem& p) {
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t j = 0; j < p.n; ++j) {
      if (supported(p, i, j) && !(plan(i, j) > 0.0)) return false;
    }
  }
  return true;
}

}  // namespace

DenseProblem make_jko_problem(std::span<const double> r_bar, const CostMatrix& cost,
                              const EnergyModel& model, double epsilon, double tau,
                              std::span<const double> volumes) {
  if (!(epsilon > 0.0)) throw InvalidArgument("oracle: epsilon must be positive");
  const std::size_t n = cost.cost.rows();
  if (n > kMaxCells) throw InvalidArgument("oracle: instance must have at most 12 cells");
  if (r_bar.size() != n || volumes.size() != n) throw InvalidArgument("oracle: shape mismatch");
  DenseProblem p;
  p.n = n;
  p.model = model;
  p.epsilon = epsilon;
  p.volumes.assign(volumes.begin(), volumes.end());
  p.r_bar = std::vector<double>(r_bar.begin(), r_bar.end());
  const std::vector<double> c = cost.cost.to_dense(kInf);
  p.reference.resize(n * n);
  for (std::size_t t = 0; t < n * n; ++t) {
    p.reference[t] = std::isinf(c[t]) ? 0.0 : std::exp(-(tau / epsilon) * c[t]);
  }
  return p;
}

double dense_objective(const DensePlan& plan, const DenseProblem& p) {
  const std::size_t n = p.n;
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double g = plan(i, j);
      const double w = p.reference[i * n + j];
      const double vol = p.volumes[i] * p.volumes[j];
      if (g < 0.0) return kInf;
      if (g == 0.0) {
        kl += vol * w;
        continue;
      }
      if (w == 0.0) return kInf;
      kl += vol * (g * std::log(g / w) - g + w);
    }
  }
  const std::vector<double> s = column_sums(plan, p.volumes);
  double energy = 0.0;
  for (std::size_t j = 0; j < n; ++j) energy += p.volumes[j] * p.model.h(s[j]);
  return p.epsilon * kl + energy;
}

double kkt_residual(const DensePlan& plan, const DenseProblem& p) {
  const std::vector<double> grad = projected_gradient_of(plan, p);
  return std::sqrt(weighted_dot(grad, grad, p.volumes));
}

OracleResult projected_gradient(const DenseProblem& p, double gradient_tol, std::size_t max_iter) {
  DensePlan g = initial_plan(p);
  double f = dense_objective(g, p);
  std::vector<double> grad = projected_gradient_of(g, p);
  double norm2 = weighted_dot(grad, grad, p.volumes);
  double step = 1.0;
  std::size_t it = 0;
  for (; it < max_iter && std::sqrt(norm2) > gradient_tol; ++it) {
    // Largest step keeping the supported entries positive.
    double t = step;
    for (std::size_t k = 0; k < g.g.size(); ++k) {
      if (grad[k] > 0.0) t = std::min(t, 0.9 * g.g[k] / grad[k]);
    }
    DensePlan trial = g;
    std::vector<double> trial_grad;
    double trial_f = kInf;
    bool accepted = false;
    for (int halvings = 0; halvings < 80; ++halvings, t *= 0.5) {
      for (std::size_t k = 0; k < g.g.size(); ++k) trial.g[k] = g.g[k] - t * grad[k];
      project_rows_affine(trial, p);
      if (!positive_on_support(trial, p)) continue;
      trial_f = dense_objective(trial, p);
      if (trial_f <= f - 1e-4 * t * norm2) {
        accepted = true;
        break;
      }
      // Below the resolution of f, use the slope along the segment instead:
      // for a convex objective a nonpositive slope at the trial point
      // certifies descent.
      trial_grad = projected_gradient_of(trial, p);
      if (weighted_dot(trial_grad, grad, p.volumes) >= 0.0 && trial_f <= f + 1e-14 * (1.0 + std::abs(f))) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    std::vector<double> new_grad = projected_gradient_of(trial, p);
    // Barzilai-Borwein trial step for the next iterate.
    std::vector<double> ds(g.g.size()), dy(g.g.size());
    for (std::size_t k = 0; k < g.g.size(); ++k) {
      ds[k] = trial.g[k] - g.g[k];
      dy[k] = new_grad[k] - grad[k];
    }
    const double sy = weighted_dot(ds, dy, p.volumes);
    const double ss = weighted_dot(ds, ds, p.volumes);
    step = sy > 0.0 ? ss / sy : 2.0 * t;
    g = std::move(trial);
    f = trial_f;
    grad = std::move(new_grad);
    norm2 = weighted_dot(grad, grad, p.volumes);
  }
  return OracleResult{g, dense_objective(g, p), std::sqrt(norm2), it};
}

OracleResult mirror_descent(const DenseProblem& p, double gradient_tol, std::size_t max_iter) {
  DensePlan g = initial_plan(p);
  double f = dense_objective(g, p);
  std::vector<double> grad = projected_gradient_of(g, p);
  double norm2 = weighted_dot(grad, grad, p.volumes);
  double step = 0.5 / p.epsilon;
  std::size_t it = 0;
  for (; it < max_iter && std::sqrt(norm2) > gradient_tol; ++it) {
    DensePlan trial = g;
    std::vector<double> trial_grad;
    double trial_f = kInf;
    double trial_norm2 = kInf;
    bool accepted = false;
    for (int halvings = 0; halvings < 80; ++halvings, step *= 0.5) {
      for (std::size_t k = 0; k < g.g.size(); ++k) trial.g[k] = g.g[k] * std::exp(-step * grad[k]);
      rescale_rows(trial, p);
      trial_f = dense_objective(trial, p);
      trial_grad = projected_gradient_of(trial, p);
      trial_norm2 = weighted_dot(trial_grad, trial_grad, p.volumes);
      double decrease = 0.0;
      for (std::size_t k = 0; k < g.g.size(); ++k) {
        decrease += p.volumes[k / p.n] * p.volumes[k % p.n] * grad[k] * (g.g[k] - trial.g[k]);
      }
      if (trial_f <= f - 1e-4 * decrease) {
        accepted = true;
        break;
      }
      if (trial_f <= f + 1e-14 * (1.0 + std::abs(f)) && trial_norm2 < norm2) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    g = std::move(trial);
    f = trial_f;
    grad = std::move(trial_grad);
    norm2 = trial_norm2;
    step = std::min(step * 1.25, 4.0 / p.epsilon);
  }
  return OracleResult{g, dense_objective(g, p), std::sqrt(norm2), it};
}

OracleResult brute_force_jko(std::span<const double> r_bar, const CostMatrix& cost,
                             const EnergyModel& model, double epsilon, double tau,
                             std::span<const double> volumes) {
  return projected_gradient(make_jko_problem(r_bar, cost, model, epsilon, tau, volumes));
}

DensePlan plan_from_state(const ScalingState& state, const GibbsKernel& kernel) {
  const std::size_t n = state.size();
  if (n > kMaxCells) throw InvalidArgument("plan_from_state: instance too large");
  const std::vector<double> a = state.linear_alpha();
  const std::vector<double> b = state.linear_beta();
  DensePlan plan{n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    kernel.matrix().for_each_in_row(i, [&](std::size_t j, double xi) { plan(i, j) = a[i] * xi * b[j]; });
  }
  return plan;
}

DensePlan dense_prox_marginal(const DensePlan& omega, std::span<const double> r_bar,
                              std::span<const double> volumes) {
  DensePlan out = omega;
  for (std::size_t i = 0; i < omega.n; ++i) {
    double mass = 0.0;
    for (std::size_t j = 0; j < omega.n; ++j) mass += volumes[j] * omega(i, j);
    for (std::size_t j = 0; j < omega.n; ++j) out(i, j) = mass > 0.0 ? omega(i, j) * r_bar[i] / mass : 0.0;
  }
  return out;
}

DensePlan dense_prox_energy(const DensePlan& omega, const EnergyModel& model, double epsilon,
                            std::span<const double> volumes) {
  DensePlan out = omega;
  const std::vector<double> s = column_sums(omega, volumes);
  for (std::size_t j = 0; j < omega.n; ++j) {
    const double scale = s[j] > 0.0 ? H_eps_inverse(model, epsilon, s[j]) / s[j] : 0.0;
    for (std::size_t i = 0; i < omega.n; ++i) out(i, j) = omega(i, j) * scale;
  }
  return out;
}

double plan_l1(const DensePlan& a, const DensePlan& b, std::span<const double> volumes) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.n; ++i) {
    for (std::size_t j = 0; j < a.n; ++j) s += volumes[i] * volumes[j] * std::abs(a(i, j) - b(i, j));
  }
  return s;
}

}  // namespace rhe::oracle
