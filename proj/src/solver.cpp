#include "rhe/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rhe/errors.hpp"

namespace rhe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLogUnderflow = std::log(1e-300);

// Quotients with the 0/0 -> 0 convention; x/0 never carries mass either.
inline double safe_div(double a, double b) { return b == 0.0 ? 0.0 : a / b; }
inline double safe_log_div(double a, double b) { return b == -kInf ? -kInf : a - b; }

std::vector<double> to_log(const std::vector<double>& x) {
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [](double t) { return t > 0.0 ? std::log(t) : -kInf; });
  return out;
}

std::vector<double> to_linear(const std::vector<double>& x) {
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [](double t) { return std::exp(t); });
  return out;
}

void check_sizes(std::size_t n, const GibbsKernel& kernel, std::span<const double> volumes) {
  if (kernel.size() != n || volumes.size() != n) {
    throw InvalidArgument("solver: kernel, volumes and factors must have equal size");
  }
}

void check_factors(std::span<const double> x, bool log_domain, std::size_t k, const char* name) {
  for (double t : x) {
    if (std::isnan(t) || (!log_domain && t < 0.0) || t == kInf) {
      throw NumericalBreakdown(std::string("Dykstra: invalid ") + name + " factor", k);
    }
  }
}

double max_log_change(const std::vector<double>& a, const std::vector<double>& b) {
  double c = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == -kInf && b[i] == -kInf) continue;
    if (a[i] == -kInf || b[i] == -kInf) return kInf;
    c = std::max(c, std::abs(a[i] - b[i]));
  }
  return c;
}

}  // namespace

ScalingState ScalingState::initial(std::size_t n, ScalingDomain domain) {
  const double one = domain == ScalingDomain::log ? 0.0 : 1.0;
  ScalingState s;
  s.domain = domain;
  s.alpha.assign(n, one);
  s.beta.assign(n, one);
  s.u.assign(n, one);
  s.v.assign(n, one);
  s.u_prev.assign(n, one);
  s.v_prev.assign(n, one);
  return s;
}

std::vector<double> ScalingState::linear_alpha() const {
  return domain == ScalingDomain::log ? to_linear(alpha) : alpha;
}
std::vector<double> ScalingState::linear_beta() const {
  return domain == ScalingDomain::log ? to_linear(beta) : beta;
}
std::vector<double> ScalingState::log_alpha() const {
  return domain == ScalingDomain::log ? alpha : to_log(alpha);
}
std::vector<double> ScalingState::log_beta() const {
  return domain == ScalingDomain::log ? beta : to_log(beta);
}

PlanFactors prox_energy(const PlanFactors& omega, const GibbsKernel& kernel,
                        const EnergyModel& model, double epsilon, std::span<const double> volumes) {
  const std::size_t n = omega.alpha.size();
  check_sizes(n, kernel, volumes);
  std::vector<double> w(n), a(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = omega.alpha[i] * volumes[i];
  kernel.apply_transpose(w, a);
  PlanFactors out = omega;
  for (std::size_t j = 0; j < n; ++j) {
    const double colsum = a[j] * omega.beta[j];
    if (colsum == 0.0) {
      out.beta[j] = 0.0;
      continue;
    }
    out.beta[j] = H_eps_inverse(model, epsilon, colsum) / a[j];
  }
  return out;
}

PlanFactors prox_marginal(const PlanFactors& omega, const GibbsKernel& kernel,
                          std::span<const double> r_bar, std::span<const double> volumes) {
  const std::size_t n = omega.alpha.size();
  check_sizes(n, kernel, volumes);
  if (r_bar.size() != n) throw InvalidArgument("prox_marginal: r_bar size mismatch");
  std::vector<double> w(n), kb(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = omega.beta[j] * volumes[j];
  kernel.apply(w, kb);
  PlanFactors out = omega;
  for (std::size_t i = 0; i < n; ++i) {
    if (r_bar[i] == 0.0) {
      out.alpha[i] = 0.0;
      continue;
    }
    if (!(kb[i] > 0.0)) {
      throw InfeasibleError("prox_marginal: positive mass on cell " + std::to_string(i) +
                            " has no admissible destination");
    }
    out.alpha[i] = r_bar[i] / kb[i];
  }
  return out;
}

Marginals plan_marginals(const ScalingState& state, const GibbsKernel& kernel,
                         std::span<const double> volumes) {
  const std::size_t n = state.size();
  check_sizes(n, kernel, volumes);
  Marginals m;
  m.row.assign(n, 0.0);
  m.col.assign(n, 0.0);
  std::vector<double> w(n), kx(n);
  if (state.domain == ScalingDomain::linear) {
    for (std::size_t j = 0; j < n; ++j) w[j] = state.beta[j] * volumes[j];
    kernel.apply(w, kx);
    for (std::size_t i = 0; i < n; ++i) m.row[i] = state.alpha[i] * kx[i];
    for (std::size_t i = 0; i < n; ++i) w[i] = state.alpha[i] * volumes[i];
    kernel.apply_transpose(w, kx);
    for (std::size_t j = 0; j < n; ++j) m.col[j] = state.beta[j] * kx[j];
  } else {
    for (std::size_t j = 0; j < n; ++j) w[j] = state.beta[j] + std::log(volumes[j]);
    kernel.apply_log(w, kx);
    for (std::size_t i = 0; i < n; ++i) m.row[i] = std::exp(state.alpha[i] + kx[i]);
    for (std::size_t i = 0; i < n; ++i) w[i] = state.alpha[i] + std::log(volumes[i]);
    kernel.apply_transpose_log(w, kx);
    for (std::size_t j = 0; j < n; ++j) m.col[j] = std::exp(state.beta[j] + kx[j]);
  }
  return m;
}

DykstraIteration::DykstraIteration(const GibbsKernel& kernel, const EnergyModel& model,
                                   double epsilon, std::span<const double> r_bar,
                                   std::span<const double> volumes)
    : kernel_(kernel), model_(model), epsilon_(epsilon), r_bar_(r_bar), volumes_(volumes) {
  if (!(epsilon > 0.0)) throw InvalidArgument("Dykstra: epsilon must be positive");
  const std::size_t n = kernel.size();
  check_sizes(r_bar.size(), kernel, volumes);
  log_volumes_.resize(n);
  for (std::size_t i = 0; i < n; ++i) log_volumes_[i] = std::log(volumes[i]);
  work_.resize(n);
  kx_.resize(n);
  next_.resize(n);
}

void DykstraIteration::step(ScalingState& s) {
  if (s.size() != kernel_.size()) throw InvalidArgument("Dykstra: state size mismatch");
  const bool even = s.k % 2 == 0;
  if (s.domain == ScalingDomain::linear) {
    even ? marginal_linear(s) : energy_linear(s);
  } else {
    even ? marginal_log(s) : energy_log(s);
  }
  ++s.k;
}

// beta <- beta ⊙ v^(k-1);  alpha <- r_bar / (xi (beta ⊙ I)).
void DykstraIteration::marginal_linear(ScalingState& s) {
  const std::size_t n = s.size();
  std::vector<double>& beta_new = next_;
  for (std::size_t j = 0; j < n; ++j) {
    beta_new[j] = s.beta[j] * s.v_prev[j];
    work_[j] = beta_new[j] * volumes_[j];
  }
  kernel_.apply(work_, kx_);
  for (std::size_t i = 0; i < n; ++i) {
    double a = 0.0;
    if (r_bar_[i] != 0.0) {
      if (!(kx_[i] > 0.0)) {
        throw InfeasibleError("Dykstra: positive mass on cell " + std::to_string(i) +
                              " has no admissible destination");
      }
      a = r_bar_[i] / kx_[i];
    }
    const double u_next = safe_div(s.alpha[i] * s.u_prev[i], a);
    s.u_prev[i] = s.u[i];
    s.u[i] = u_next;
    s.alpha[i] = a;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double v_next = safe_div(s.beta[j] * s.v_prev[j], beta_new[j]);
    s.v_prev[j] = s.v[j];
    s.v[j] = v_next;
    s.beta[j] = beta_new[j];
  }
  check_factors(s.alpha, false, s.k, "alpha");
}

// alpha <- alpha ⊙ u^(k-1);  beta <- H^{-1}(A ⊙ beta ⊙ v^(k-1)) / A with A = xi^T (alpha ⊙ I).
void DykstraIteration::energy_linear(ScalingState& s) {
  const std::size_t n = s.size();
  std::vector<double>& alpha_new = next_;
  for (std::size_t i = 0; i < n; ++i) {
    alpha_new[i] = s.alpha[i] * s.u_prev[i];
    work_[i] = alpha_new[i] * volumes_[i];
  }
  kernel_.apply_transpose(work_, kx_);
  for (std::size_t j = 0; j < n; ++j) {
    const double a = kx_[j];
    const double pre = s.beta[j] * s.v_prev[j];
    double b = 0.0;
    if (a > 0.0 && pre > 0.0) {
      const double log_eta = std::log(a) + std::log(pre);
      if (log_eta >= kLogUnderflow) {
        b = std::exp(log_H_eps_inverse(model_, epsilon_, log_eta) - std::log(a));
      }
    }
    const double v_next = safe_div(pre, b);
    s.v_prev[j] = s.v[j];
    s.v[j] = v_next;
    s.beta[j] = b;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double u_next = safe_div(s.alpha[i] * s.u_prev[i], alpha_new[i]);
    s.u_prev[i] = s.u[i];
    s.u[i] = u_next;
    s.alpha[i] = alpha_new[i];
  }
  check_factors(s.beta, false, s.k, "beta");
}

void DykstraIteration::marginal_log(ScalingState& s) {
  const std::size_t n = s.size();
  std::vector<double>& beta_new = next_;
  for (std::size_t j = 0; j < n; ++j) {
    beta_new[j] = s.beta[j] + s.v_prev[j];
    work_[j] = beta_new[j] + log_volumes_[j];
  }
  kernel_.apply_log(work_, kx_);
  for (std::size_t i = 0; i < n; ++i) {
    double a = -kInf;
    if (r_bar_[i] != 0.0) {
      if (kx_[i] == -kInf) {
        throw InfeasibleError("Dykstra: positive mass on cell " + std::to_string(i) +
                              " has no admissible destination");
      }
      a = std::log(r_bar_[i]) - kx_[i];
    }
    const double u_next = safe_log_div(s.alpha[i] + s.u_prev[i], a);
    s.u_prev[i] = s.u[i];
    s.u[i] = u_next;
    s.alpha[i] = a;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double v_next = safe_log_div(s.beta[j] + s.v_prev[j], beta_new[j]);
    s.v_prev[j] = s.v[j];
    s.v[j] = v_next;
    s.beta[j] = beta_new[j];
  }
  check_factors(s.alpha, true, s.k, "alpha");
}

void DykstraIteration::energy_log(ScalingState& s) {
  const std::size_t n = s.size();
  std::vector<double>& alpha_new = next_;
  for (std::size_t i = 0; i < n; ++i) {
    alpha_new[i] = s.alpha[i] + s.u_prev[i];
    work_[i] = alpha_new[i] + log_volumes_[i];
  }
  kernel_.apply_transpose_log(work_, kx_);
  for (std::size_t j = 0; j < n; ++j) {
    const double la = kx_[j];
    const double pre = s.beta[j] + s.v_prev[j];
    double b = -kInf;
    if (la != -kInf && pre != -kInf) b = log_H_eps_inverse(model_, epsilon_, la + pre) - la;
    const double v_next = safe_log_div(pre, b);
    s.v_prev[j] = s.v[j];
    s.v[j] = v_next;
    s.beta[j] = b;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double u_next = safe_log_div(s.alpha[i] + s.u_prev[i], alpha_new[i]);
    s.u_prev[i] = s.u[i];
    s.u[i] = u_next;
    s.alpha[i] = alpha_new[i];
  }
  check_factors(s.beta, true, s.k, "beta");
}

void dykstra_step(ScalingState& state, const GibbsKernel& kernel, std::span<const double> r_bar,
                  const EnergyModel& model, double epsilon, std::span<const double> volumes) {
  DykstraIteration it(kernel, model, epsilon, r_bar, volumes);
  it.step(state);
}

double objective_value(const ScalingState& state, const GibbsKernel& kernel,
                       const EnergyModel& model, double epsilon, std::span<const double> volumes) {
  const std::size_t n = state.size();
  const Marginals m = plan_marginals(state, kernel, volumes);
  const std::vector<double> la = state.log_alpha();
  const std::vector<double> lb = state.log_beta();
  std::vector<double> ones(n), k1(n);
  for (std::size_t j = 0; j < n; ++j) ones[j] = volumes[j];
  kernel.apply(ones, k1);

  // KL(g | xi) = sum |Q_i||Q_j| [g log(g/xi) - g + xi] with log(g/xi) = log α_i + log β_j.
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (m.row[i] > 0.0) kl += volumes[i] * m.row[i] * la[i];
    if (m.col[i] > 0.0) kl += volumes[i] * m.col[i] * lb[i];
    kl += volumes[i] * (k1[i] - m.row[i]);
  }
  double energy = 0.0;
  for (std::size_t j = 0; j < n; ++j) energy += volumes[j] * model.h(m.col[j]);
  return epsilon * kl + energy;
}

JkoResult jko_step(const Grid& grid, const DensityVector& r_prev, const GibbsKernel& kernel,
                   const EnergyModel& model, double epsilon, const SolverOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidArgument("jko_step: tol must be positive");
  const std::size_t n = grid.size();
  if (r_prev.size() != n || kernel.size() != n) throw InvalidArgument("jko_step: size mismatch");
  const auto volumes = grid.volumes();
  const ScalingDomain domain = options.log_domain ? ScalingDomain::log : ScalingDomain::linear;
  if (options.log_domain && !kernel.has_log()) {
    throw InvalidArgument("jko_step: log-domain iteration needs a kernel built with log values");
  }

  ScalingState state = ScalingState::initial(n, domain);
  DykstraIteration it(kernel, model, epsilon, r_prev.values(), volumes);
  SolveReport report;
  std::vector<double> last_alpha, last_beta;
  double change = kInf;
  // Every loaded row has a single admissible destination: the marginal
  // constraint alone pins the plan, so one marginal sweep is the answer.
  bool pinned = true;
  for (std::size_t i = 0; i < n && pinned; ++i) {
    pinned = r_prev[i] == 0.0 || kernel.matrix().pattern().row_nnz(i) == 1;
  }
  if (pinned) {
    report.converged = true;
    change = 0.0;
  }
  while (!pinned && report.iterations + 2 <= options.max_iter) {
    it.step(state);
    it.step(state);
    report.iterations += 2;
    std::vector<double> la = state.log_alpha();
    std::vector<double> lb = state.log_beta();
    if (!last_alpha.empty()) {
      change = std::max(max_log_change(la, last_alpha), max_log_change(lb, last_beta));
      if (change <= options.tol) {
        report.converged = true;
        break;
      }
    }
    last_alpha = std::move(la);
    last_beta = std::move(lb);
  }
  report.final_change = change;
  if (!report.converged && change > 100.0 * options.tol) {
    throw NonConvergence("jko_step: no convergence after " + std::to_string(report.iterations) +
                             " sweeps (change " + std::to_string(change) + ")",
                         report);
  }

  // Close on a marginal sweep: the plan then has X-marginal r_prev exactly.
  it.step(state);
  ++report.iterations;

  // Gauge: max alpha = max beta.
  {
    const std::vector<double> la = state.log_alpha();
    const std::vector<double> lb = state.log_beta();
    const double ma = *std::max_element(la.begin(), la.end());
    const double mb = *std::max_element(lb.begin(), lb.end());
    if (std::isfinite(ma) && std::isfinite(mb)) {
      const double shift = 0.5 * (mb - ma);
      if (state.domain == ScalingDomain::log) {
        for (double& a : state.alpha) a += shift;
        for (double& b : state.beta) b -= shift;
      } else {
        const double c = std::exp(shift);
        for (double& a : state.alpha) a *= c;
        for (double& b : state.beta) b /= c;
      }
    }
  }

  Marginals m = plan_marginals(state, kernel, volumes);
  double residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) residual += volumes[i] * std::abs(m.row[i] - r_prev[i]);
  report.x_marginal_residual = residual;
  report.mass_before_renormalization = total_mass(m.col, volumes);
  report.objective = objective_value(state, kernel, model, epsilon, volumes);
  for (std::size_t j = 0; j < n; ++j) {
    if (grid.masked(j)) m.col[j] = 0.0;
  }
  DensityVector r_next = DensityVector::normalized(grid, std::move(m.col));
  return JkoResult{std::move(r_next), std::move(state), report};
}

}  // namespace rhe
