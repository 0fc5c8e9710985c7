#include "rhe/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rhe/errors.hpp"

namespace rhe {

namespace {

Point domain_center(const Grid& grid) {
  return {0.5 * (grid.domain_min()[0] + grid.domain_max()[0]),
          0.5 * (grid.domain_min()[1] + grid.domain_max()[1])};
}

FlowRecord make_record(const Grid& grid, std::size_t n, DensityVector r, const Point& anchor) {
  FlowRecord rec;
  rec.n = n;
  rec.support = support_set(r);
  rec.support_radius = support_radius(grid, rec.support, anchor);
  rec.density = std::move(r);
  return rec;
}

}  // namespace

std::size_t FlowTrace::total_sweeps() const noexcept {
  std::size_t s = 0;
  for (const auto& r : records) s += r.report.iterations;
  return s;
}

std::vector<std::size_t> support_set(const DensityVector& r) {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] > 0.0) s.push_back(i);
  }
  return s;
}

double support_radius(const Grid& grid, std::span<const std::size_t> support, const Point& anchor) {
  double r = 0.0;
  for (std::size_t i : support) {
    const Point c = grid.center(i);
    const double dx = c[0] - anchor[0];
    const double dy = grid.dim() == 2 ? c[1] - anchor[1] : 0.0;
    r = std::max(r, std::hypot(dx, dy));
  }
  return r;
}

std::vector<double> energy_series(const FlowTrace& trace) {
  std::vector<double> e;
  e.reserve(trace.records.size());
  for (const auto& r : trace.records) e.push_back(r.energy);
  return e;
}

FlowTrace run_flow(const Grid& grid, const CostFunction& cost_fn, const EnergyModel& model,
                   double epsilon, double tau, std::size_t steps, const DensityVector& r0,
                   const FlowOptions& options) {
  const CostMatrix cm = discrete_cost_matrix(grid, cost_fn, tau);
  const GibbsKernel kernel = gibbs_kernel(cm, epsilon, tau, options.solver.log_domain);
  return run_flow(grid, kernel, model, epsilon, steps, r0, options);
}

FlowTrace run_flow(const Grid& grid, const GibbsKernel& kernel, const EnergyModel& model,
                   double epsilon, std::size_t steps, const DensityVector& r0,
                   const FlowOptions& options) {
  if (r0.size() != grid.size()) throw InvalidArgument("run_flow: initial density does not match the grid");
  const Point anchor = options.anchor.value_or(domain_center(grid));
  const auto volumes = grid.volumes();

  FlowTrace trace;
  trace.records.push_back(make_record(grid, 0, r0, anchor));
  trace.records.back().mass = total_mass(r0.values(), volumes);
  trace.records.back().energy = discrete_energy(model, r0.values(), volumes);
  if (options.on_record) options.on_record(trace.records.back());

  for (std::size_t n = 1; n <= steps; ++n) {
    const DensityVector& prev = trace.records.back().density;
    JkoResult res;
    try {
      res = jko_step(grid, prev, kernel, model, epsilon, options.solver);
    } catch (const std::exception& e) {
      throw FlowFailure("step " + std::to_string(n) + ": " + e.what(), n);
    }
    if (options.on_state) options.on_state(n, res.state);
    double l1 = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) l1 += volumes[i] * std::abs(res.r_next[i] - prev[i]);

    FlowRecord rec = make_record(grid, n, std::move(res.r_next), anchor);
    rec.mass = res.report.mass_before_renormalization;
    rec.energy = discrete_energy(model, rec.density.values(), volumes);
    rec.report = res.report;
    rec.l1_change = l1;
    trace.records.push_back(std::move(rec));
    if (options.on_record) options.on_record(trace.records.back());
    if (options.stop_at_steady && l1 <= options.steady_tol) {
      trace.steady = true;
      break;
    }
  }
  return trace;
}

GammaProbeResult gamma_probe(const GammaProbeProblem& problem,
                             std::span<const std::pair<double, double>> ladder, double tau,
                             const EnergyModel& model, const CostFunction& cost_fn,
                             const SolverOptions& solver, double log_domain_below) {
  if (ladder.empty()) throw InvalidArgument("gamma_probe: empty ladder");
  if (!problem.r_bar) throw InvalidArgument("gamma_probe: missing initial sampler");
  const double length = problem.domain_max - problem.domain_min;
  if (!(length > 0.0)) throw InvalidArgument("gamma_probe: empty domain");

  GammaProbeResult out;
  std::vector<std::size_t> cells;
  for (const auto& [eps, delta] : ladder) {
    if (!(eps > 0.0) || !(delta > 0.0) || !(delta < 1.0)) {
      throw InvalidArgument("gamma_probe: need epsilon > 0 and 0 < delta < 1");
    }
    const double count = length / delta;
    const auto m = static_cast<std::size_t>(std::llround(count));
    if (m == 0 || std::abs(count - static_cast<double>(m)) > 1e-9 * count) {
      throw InvalidArgument("gamma_probe: delta must divide the domain length");
    }
    if (!cells.empty() && m % cells.back() != 0) {
      throw InvalidArgument("gamma_probe: meshes must be nested");
    }
    const double product = eps * std::log(1.0 / delta);
    if (!out.products.empty() && product > out.products.back()) {
      throw InvalidArgument("gamma_probe: epsilon log(1/delta) must not increase along the ladder");
    }
    cells.push_back(m);
    out.products.push_back(product);
  }
  const std::size_t fine = cells.back();

  out.rungs.resize(ladder.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(ladder.size()); ++k) {
    GammaRung& rung = out.rungs[k];
    rung.epsilon = ladder[k].first;
    rung.delta = ladder[k].second;
    rung.cells = cells[k];
    rung.log_domain = rung.epsilon <= log_domain_below;
    try {
      const double lo[1] = {problem.domain_min};
      const double hi[1] = {problem.domain_max};
      const int res[1] = {static_cast<int>(cells[k])};
      const Grid grid = build_uniform_grid(lo, hi, res);
      const DensityVector r_bar = project_density(problem.r_bar, grid);
      const CostMatrix cm = discrete_cost_matrix(grid, cost_fn, tau);
      const GibbsKernel kernel = gibbs_kernel(cm, rung.epsilon, tau, rung.log_domain);
      SolverOptions opt = solver;
      opt.log_domain = rung.log_domain;
      JkoResult r = jko_step(grid, r_bar, kernel, model, rung.epsilon, opt);
      rung.report = r.report;
      rung.density.assign(r.r_next.values().begin(), r.r_next.values().end());
      const std::size_t ratio = fine / cells[k];
      rung.prolonged.resize(fine);
      for (std::size_t i = 0; i < fine; ++i) rung.prolonged[i] = rung.density[i / ratio];
    } catch (const std::exception& e) {
      rung.error = e.what();
    }
  }

  const double fine_volume = length / static_cast<double>(fine);
  for (std::size_t k = 0; k + 1 < out.rungs.size(); ++k) {
    const GammaRung& a = out.rungs[k];
    const GammaRung& b = out.rungs[k + 1];
    if (a.error || b.error) {
      out.gaps.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    double gap = 0.0;
    for (std::size_t i = 0; i < fine; ++i) gap += fine_volume * std::abs(a.prolonged[i] - b.prolonged[i]);
    out.gaps.push_back(gap);
  }
  return out;
}

}  // namespace rhe
