#include "rhe/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "rhe/cost.hpp"
#include "rhe/errors.hpp"
#include "rhe/io.hpp"

namespace rhe {

namespace fs = std::filesystem;

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string short_fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory", dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing", path);
  out << text;
  out.flush();
  if (!out) throw IoError("write failed", path);
}

Sampler make_sampler(const ExperimentConfig& cfg) {
  switch (cfg.init.kind) {
    case InitKind::uniform:
      return [](const Point&) { return 1.0; };
    case InitKind::ball: {
      const Point c = cfg.init.center;
      const double r = cfg.init.radius;
      const int dim = cfg.dim;
      return [c, r, dim](const Point& p) {
        const double dx = p[0] - c[0];
        const double dy = dim == 2 ? p[1] - c[1] : 0.0;
        return dx * dx + dy * dy <= r * r ? 1.0 : 0.0;
      };
    }
    case InitKind::table:
      break;
  }
  throw ConfigError("key 'init.kind': a table cannot be sampled at arbitrary points");
}

ExperimentSummary run_one(const ExperimentConfig& cfg, const Grid& grid, const DensityVector& r0,
                          const EnergyModel& model, const fs::path& dir, FlowTrace* keep) {
  ensure_dir(dir);
  const fs::path trace_path = dir / "trace.csv";
  std::ofstream trace(trace_path);
  if (!trace) throw IoError("cannot open for writing", trace_path);
  trace << trace_csv_header() << '\n';

  ExperimentSummary sum;
  FlowOptions opt;
  opt.solver.tol = cfg.tol;
  opt.solver.max_iter = cfg.max_iter;
  opt.solver.log_domain = cfg.log_domain;
  opt.anchor = cfg.anchor;
  opt.stop_at_steady = cfg.stop_at_steady;
  opt.steady_tol = cfg.steady_tol;
  opt.on_record = [&](const FlowRecord& rec) {
    trace << trace_csv_row(rec) << '\n';
    trace.flush();
    if (!trace) throw IoError("write failed", trace_path);
    const std::string stem = "density_step_" + std::to_string(rec.n);
    write_csv_snapshot(rec.density, grid, dir / (stem + ".csv"));
    if (grid.dim() == 2) write_pgm(rec.density, grid, dir / (stem + ".pgm"));
    if (rec.n > 0) {
      const double drift = std::abs(rec.mass - 1.0);
      sum.max_mass_drift = std::max(sum.max_mass_drift, drift);
      sum.final_mass_drift = drift;
      sum.sweeps += rec.report.iterations;
      sum.steps = rec.n;
    }
  };
  if (cfg.dump_scaling) {
    opt.on_state = [&](std::size_t n, const ScalingState& s) {
      write_scaling_csv(s, dir / ("scaling_step_" + std::to_string(n) + ".csv"));
    };
  }

  const CostFunction cost_fn{cfg.speed_limit};
  const CostMatrix cm = discrete_cost_matrix(grid, cost_fn, cfg.tau);
  const GibbsKernel kernel = gibbs_kernel(cm, cfg.epsilon, cfg.tau, cfg.log_domain);
  if (cfg.dump_kernel) write_kernel_csv(kernel, dir / "kernel.csv");

  FlowTrace t = run_flow(grid, kernel, model, cfg.epsilon, cfg.steps, r0, opt);
  sum.steady = t.steady;
  if (keep) *keep = std::move(t);
  return sum;
}

std::string summary_table(const ExperimentConfig& cfg, const ExperimentSummary& s) {
  std::ostringstream o;
  o << "experiment        " << experiment_name(cfg.experiment) << '\n';
  o << "steps             " << s.steps << '\n';
  o << "dykstra_sweeps    " << s.sweeps << '\n';
  o << "wall_time_s       " << short_fmt(s.wall_seconds) << '\n';
  o << "max_mass_drift    " << short_fmt(s.max_mass_drift) << '\n';
  o << "final_mass_drift  " << short_fmt(s.final_mass_drift) << '\n';
  if (cfg.stop_at_steady) o << "steady            " << (s.steady ? "yes" : "no") << '\n';
  return o.str();
}

ExperimentSummary run_probe(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& log) {
  std::vector<std::pair<double, double>> ladder;
  for (int k = cfg.probe_k_min; k <= cfg.probe_k_max; ++k) {
    const double h = std::ldexp(1.0, -k);
    ladder.emplace_back(h, h);
  }
  GammaProbeProblem problem{cfg.domain_min[0], cfg.domain_max[0], make_sampler(cfg)};
  SolverOptions solver;
  solver.tol = cfg.tol;
  solver.max_iter = cfg.max_iter;
  const GammaProbeResult res = gamma_probe(problem, ladder, cfg.tau, cfg.energy.model(),
                                           CostFunction{cfg.speed_limit}, solver, cfg.probe_log_domain_below);

  ExperimentSummary sum;
  std::ostringstream table;
  table << "k,epsilon,delta,cells,product,gap_to_next,iterations,x_marginal_residual,log_domain\n";
  for (std::size_t r = 0; r < res.rungs.size(); ++r) {
    const GammaRung& rung = res.rungs[r];
    const int k = cfg.probe_k_min + static_cast<int>(r);
    if (rung.error) throw FlowFailure("probe rung k=" + std::to_string(k) + ": " + *rung.error, 1);
    table << k << ',' << fmt(rung.epsilon) << ',' << fmt(rung.delta) << ',' << rung.cells << ','
          << fmt(res.products[r]) << ',' << (r < res.gaps.size() ? fmt(res.gaps[r]) : std::string("")) << ','
          << rung.report.iterations << ',' << fmt(rung.report.x_marginal_residual) << ','
          << (rung.log_domain ? 1 : 0) << '\n';

    std::ostringstream snap;
    snap << "x,density\n";
    for (std::size_t i = 0; i < rung.cells; ++i) {
      snap << fmt(cfg.domain_min[0] + (static_cast<double>(i) + 0.5) * rung.delta) << ',' << fmt(rung.density[i])
           << '\n';
    }
    write_text(dir / ("density_rung_" + std::to_string(k) + ".csv"), snap.str());
    sum.sweeps += rung.report.iterations;
    const double drift = std::abs(rung.report.mass_before_renormalization - 1.0);
    sum.max_mass_drift = std::max(sum.max_mass_drift, drift);
    sum.final_mass_drift = drift;
  }
  write_text(dir / "trace.csv", table.str());
  sum.steps = 1;
  log << "rung  epsilon      cells  gap_to_next\n";
  for (std::size_t r = 0; r < res.rungs.size(); ++r) {
    char line[128];
    std::snprintf(line, sizeof line, "%-5d %-12.6g %-6zu %s\n", cfg.probe_k_min + static_cast<int>(r),
                  res.rungs[r].epsilon, res.rungs[r].cells,
                  r < res.gaps.size() ? short_fmt(res.gaps[r]).c_str() : "-");
    log << line;
  }
  return sum;
}

void write_compare_pairs(const Grid& grid, const FlowTrace& a, const FlowTrace& b, const fs::path& dir) {
  const std::size_t n = std::min(a.records.size(), b.records.size());
  for (std::size_t s = 0; s < n; ++s) {
    std::ostringstream o;
    o << "x,first,second\n";
    const auto& ra = a.records[s].density;
    const auto& rb = b.records[s].density;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      o << fmt(grid.center(i)[0]) << ',' << fmt(ra[i]) << ',' << fmt(rb[i]) << '\n';
    }
    write_text(dir / ("compare_step_" + std::to_string(s) + ".csv"), o.str());
  }
}

std::string energy_label(const EnergyConfig& e) {
  if (e.kind == EnergyModel::Kind::boltzmann) return "boltzmann";
  std::ostringstream o;
  o << "power_m" << e.m;
  return o.str();
}

}  // namespace

Grid make_grid(const ExperimentConfig& cfg) {
  const std::span<const double> lo(cfg.domain_min.data(), static_cast<std::size_t>(cfg.dim));
  const std::span<const double> hi(cfg.domain_max.data(), static_cast<std::size_t>(cfg.dim));
  const std::span<const int> res(cfg.resolution.data(), static_cast<std::size_t>(cfg.dim));
  Grid grid = build_uniform_grid(lo, hi, res);
  if (!cfg.obstacles.empty()) grid = apply_obstacle(grid, cfg.obstacles);
  return grid;
}

DensityVector make_initial_density(const ExperimentConfig& cfg, const Grid& grid) {
  if (cfg.init.kind == InitKind::table) {
    std::vector<double> values = read_csv_snapshot(cfg.init.table);
    if (values.size() != grid.size()) {
      throw ConfigError("key 'init.table': " + std::to_string(values.size()) + " values for " +
                        std::to_string(grid.size()) + " cells");
    }
    try {
      return DensityVector::normalized(grid, std::move(values));
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("key 'init.table': ") + e.what());
    }
  }
  try {
    return project_density(make_sampler(cfg), grid);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("key 'init': ") + e.what());
  }
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir(cfg.output_dir);
  ensure_dir(dir);
  write_text(dir / "config.txt", to_text(cfg));

  ExperimentSummary sum;
  if (cfg.experiment == Experiment::probe) {
    sum = run_probe(cfg, dir, log);
  } else {
    Grid grid;
    try {
      grid = make_grid(cfg);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("grid: ") + e.what());
    }
    const DensityVector r0 = make_initial_density(cfg, grid);
    if (cfg.experiment == Experiment::compare) {
      FlowTrace a, b;
      const ExperimentSummary sa =
          run_one(cfg, grid, r0, cfg.energy.model(), dir / ("first_" + energy_label(cfg.energy)), &a);
      const ExperimentSummary sb = run_one(cfg, grid, r0, cfg.compare_energy.model(),
                                           dir / ("second_" + energy_label(cfg.compare_energy)), &b);
      write_compare_pairs(grid, a, b, dir);
      sum.steps = std::max(sa.steps, sb.steps);
      sum.sweeps = sa.sweeps + sb.sweeps;
      sum.max_mass_drift = std::max(sa.max_mass_drift, sb.max_mass_drift);
      sum.final_mass_drift = std::max(sa.final_mass_drift, sb.final_mass_drift);
    } else {
      sum = run_one(cfg, grid, r0, cfg.energy.model(), dir, nullptr);
    }
  }
  sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::string table = summary_table(cfg, sum);
  write_text(dir / "summary.txt", table);
  log << table;
  return sum;
}

}  // namespace rhe
