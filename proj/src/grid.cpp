#include "rhe/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rhe/errors.hpp"

namespace rhe {

namespace {

double box_slack(const Box& box, int dim) {
  double scale = 1.0;
  for (int a = 0; a < dim; ++a) {
    scale = std::max({scale, std::abs(box.lo[a]), std::abs(box.hi[a])});
  }
  return 1e-9 * scale;
}

}  // namespace

double Grid::max_delta() const noexcept {
  return dim_ == 1 ? delta_[0] : std::max(delta_[0], delta_[1]);
}

Point Grid::center(std::size_t i) const noexcept {
  const std::size_t ix = i % nx();
  const std::size_t iy = i / nx();
  Point c{lo_[0] + (static_cast<double>(ix) + 0.5) * delta_[0], 0.0};
  if (dim_ == 2) c[1] = lo_[1] + (static_cast<double>(iy) + 0.5) * delta_[1];
  return c;
}

std::size_t Grid::masked_count() const noexcept {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

Grid build_uniform_grid(std::span<const double> domain_min, std::span<const double> domain_max,
                        std::span<const int> resolution) {
  const std::size_t d = domain_min.size();
  if (d < 1 || d > 2 || domain_max.size() != d || resolution.size() != d) {
    throw InvalidArgument("grid: dimension must be 1 or 2 with matching bounds and resolution");
  }
  Grid g;
  g.dim_ = static_cast<int>(d);
  for (std::size_t a = 0; a < d; ++a) {
    if (!(domain_max[a] > domain_min[a])) {
      throw InvalidArgument("grid: non-positive extent on axis " + std::to_string(a));
    }
    if (resolution[a] < 1) {
      throw InvalidArgument("grid: resolution must be at least 1 on axis " + std::to_string(a));
    }
    g.lo_[a] = domain_min[a];
    g.hi_[a] = domain_max[a];
    g.resolution_[a] = resolution[a];
    g.delta_[a] = (domain_max[a] - domain_min[a]) / resolution[a];
  }
  if (d == 1) {
    g.lo_[1] = 0.0;
    g.hi_[1] = 1.0;
    g.resolution_[1] = 1;
    g.delta_[1] = 1.0;
  }
  const std::size_t n = g.nx() * g.ny();
  const double vol = d == 1 ? g.delta_[0] : g.delta_[0] * g.delta_[1];
  g.volumes_.assign(n, vol);
  g.mask_.assign(n, 0);
  return g;
}

bool point_in_box(const Point& p, const Box& box, int dim) noexcept {
  const double s = box_slack(box, dim);
  for (int a = 0; a < dim; ++a) {
    if (p[a] < box.lo[a] - s || p[a] > box.hi[a] + s) return false;
  }
  return true;
}

bool segment_hits_box(const Point& a, const Point& b, const Box& box, int dim) noexcept {
  const double s = box_slack(box, dim);
  double t0 = 0.0;
  double t1 = 1.0;
  for (int ax = 0; ax < dim; ++ax) {
    const double lo = box.lo[ax] - s;
    const double hi = box.hi[ax] + s;
    const double d = b[ax] - a[ax];
    if (d == 0.0) {
      if (a[ax] < lo || a[ax] > hi) return false;
      continue;
    }
    double ta = (lo - a[ax]) / d;
    double tb = (hi - a[ax]) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

Grid apply_obstacle(const Grid& grid, std::span<const Box> regions) {
  Grid out = grid;
  for (const Box& box : regions) {
    for (int a = 0; a < grid.dim(); ++a) {
      if (!(box.hi[a] >= box.lo[a])) throw InvalidArgument("obstacle: box with hi < lo");
      if (box.hi[a] < grid.domain_min()[a] || box.lo[a] > grid.domain_max()[a]) {
        throw InvalidArgument("obstacle: region does not intersect the domain");
      }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (point_in_box(out.center(i), box, out.dim())) out.mask_[i] = 1;
    }
    const bool known = std::any_of(out.obstacles_.begin(), out.obstacles_.end(), [&](const Box& b) {
      return b.lo == box.lo && b.hi == box.hi;
    });
    if (!known) out.obstacles_.push_back(box);
  }
  if (out.masked_count() == out.size()) {
    throw InvalidArgument("obstacle: every cell is masked, no admissible state space");
  }
  return out;
}

double total_mass(std::span<const double> r, std::span<const double> volumes) noexcept {
  double m = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) m += r[i] * volumes[i];
  return m;
}

DensityVector DensityVector::from_normalized(const Grid& grid, std::vector<double> values) {
  if (values.size() != grid.size()) {
    throw InvalidArgument("density: size " + std::to_string(values.size()) +
                          " does not match grid size " + std::to_string(grid.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
      throw InvalidArgument("density: negative or non-finite value at cell " + std::to_string(i));
    }
    if (grid.masked(i) && values[i] != 0.0) {
      throw InvalidArgument("density: positive value on masked cell " + std::to_string(i));
    }
  }
  DensityVector r;
  r.values_ = std::move(values);
  return r;
}

DensityVector DensityVector::normalized(const Grid& grid, std::vector<double> values) {
  DensityVector r = from_normalized(grid, std::move(values));
  const double m = total_mass(r.values_, grid.volumes());
  if (!(m > 0.0)) throw InvalidArgument("density: zero total mass");
  for (double& v : r.values_) v /= m;
  return r;
}

DensityVector project_density(const Sampler& sampler, const Grid& grid) {
  std::vector<double> values(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.masked(i)) continue;
    const double s = sampler(grid.center(i));
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw InvalidArgument("project_density: sampler returned a negative or non-finite value");
    }
    values[i] = s;
  }
  if (std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; })) {
    throw InvalidArgument("project_density: sampler vanishes on every unmasked cell");
  }
  return DensityVector::normalized(grid, std::move(values));
}

}  // namespace rhe
