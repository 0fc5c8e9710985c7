#include "rhe/cost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <unordered_map>
#include <utility>

#include "rhe/errors.hpp"

namespace rhe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Largest k >= 0 with hypot(k * dx, fixed) <= limit, or -1 if none.
long widest_offset(double dx, double fixed, double limit) {
  if (std::abs(fixed) > limit) return -1;
  long k = static_cast<long>(std::floor(std::sqrt(std::max(0.0, limit * limit - fixed * fixed)) / dx));
  while (std::hypot((k + 1) * dx, fixed) <= limit) ++k;
  while (k >= 0 && std::hypot(k * dx, fixed) > limit) --k;
  return k;
}

bool blocked(const Grid& grid, const Point& a, const Point& b) {
  for (const Box& box : grid.obstacles()) {
    if (segment_hits_box(a, b, box, grid.dim())) return true;
  }
  return false;
}

std::uint64_t pair_key(std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint64_t>(j);
}

/// Truncated Dijkstra on the stencil graph around obstacles.
class StencilGraph {
 public:
  explicit StencilGraph(const Grid& grid) : grid_(grid), dist_(grid.size(), kInf) {
    const int reach = 3;
    const int ry = grid.dim() == 2 ? reach : 0;
    for (int b = -ry; b <= ry; ++b) {
      for (int a = -reach; a <= reach; ++a) {
        if (a == 0 && b == 0) continue;
        offsets_.push_back({a, b, std::hypot(a * grid.delta()[0], grid.dim() == 2 ? b * grid.delta()[1] : 0.0)});
      }
    }
    const std::size_t n = grid.size();
    open_.assign(n * offsets_.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (grid.masked(i)) continue;
      const long ix = static_cast<long>(i % grid.nx());
      const long iy = static_cast<long>(i / grid.nx());
      for (std::size_t s = 0; s < offsets_.size(); ++s) {
        const long jx = ix + offsets_[s].a;
        const long jy = iy + offsets_[s].b;
        if (jx < 0 || jy < 0 || jx >= static_cast<long>(grid.nx()) || jy >= static_cast<long>(grid.ny())) {
          continue;
        }
        const std::size_t j = grid.index(static_cast<std::size_t>(jx), static_cast<std::size_t>(jy));
        if (grid.masked(j) || blocked(grid, grid.center(i), grid.center(j))) continue;
        open_[i * offsets_.size() + s] = 1;
      }
    }
  }

  /// Runs Dijkstra from `source` up to `limit`; `visit(j, d)` is called for
  /// every settled node.
  template <class F>
  void run(std::size_t source, double limit, F&& visit) {
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist_[source] = 0.0;
    touched_.push_back(source);
    heap.push({0.0, source});
    const std::size_t m = offsets_.size();
    while (!heap.empty()) {
      const auto [d, i] = heap.top();
      heap.pop();
      if (d > dist_[i]) continue;
      visit(i, d);
      const long ix = static_cast<long>(i % grid_.nx());
      const long iy = static_cast<long>(i / grid_.nx());
      for (std::size_t s = 0; s < m; ++s) {
        if (!open_[i * m + s]) continue;
        const std::size_t j = grid_.index(static_cast<std::size_t>(ix + offsets_[s].a),
                                          static_cast<std::size_t>(iy + offsets_[s].b));
        const double nd = d + offsets_[s].length;
        if (nd > limit || nd >= dist_[j]) continue;
        if (dist_[j] == kInf) touched_.push_back(j);
        dist_[j] = nd;
        heap.push({nd, j});
      }
    }
    for (std::size_t t : touched_) dist_[t] = kInf;
    touched_.clear();
  }

 private:
  struct Offset {
    int a;
    int b;
    double length;
  };
  const Grid& grid_;
  std::vector<Offset> offsets_;
  std::vector<std::uint8_t> open_;
  std::vector<double> dist_;
  std::vector<std::size_t> touched_;
};

}  // namespace

double eval_cost(const CostFunction& c, double speed) noexcept {
  const double v = std::abs(speed) / c.speed_limit;
  if (v > 1.0) return kInf;
  return 1.0 - std::sqrt(1.0 - v * v);
}

double eval_cost(const CostFunction& c, std::span<const double> velocity) noexcept {
  double s = 0.0;
  for (double x : velocity) s += x * x;
  return eval_cost(c, std::sqrt(s));
}

SegmentedMatrix geodesic_distances(const Grid& grid, double radius) {
  if (!(radius >= 0.0)) throw InvalidArgument("geodesic_distances: negative radius");
  const double limit = radius * (1.0 + kRadiusSlack);
  const double dx = grid.delta()[0];
  const double dy = grid.delta()[1];
  const long nx = static_cast<long>(grid.nx());
  const long ny = static_cast<long>(grid.ny());
  const long wy = grid.dim() == 2 ? widest_offset(dy, 0.0, limit) : 0;

  // One distance profile per row offset, shared by every visible run.
  RunPatternBuilder builder(grid.size(), grid.size());
  std::vector<long> wx(static_cast<std::size_t>(2 * wy + 1));
  std::vector<std::uint64_t> profile_at(wx.size());
  std::vector<double> buf;
  for (long b = -wy; b <= wy; ++b) {
    const double fy = grid.dim() == 2 ? b * dy : 0.0;
    const long w = widest_offset(dx, fy, limit);
    wx[b + wy] = w;
    buf.clear();
    for (long a = -w; a <= w; ++a) buf.push_back(std::hypot(a * dx, fy));
    profile_at[b + wy] = builder.add_profile(buf);
  }

  const bool has_obstacles = !grid.obstacles().empty();
  std::unordered_map<std::uint64_t, double> detour;
  if (has_obstacles) {
    StencilGraph graph(grid);
    std::vector<std::size_t> hidden;
    std::vector<double> hidden_dist;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid.masked(i)) continue;
      const Point ci = grid.center(i);
      const long ix = static_cast<long>(i) % nx;
      const long iy = static_cast<long>(i) / nx;
      hidden.clear();
      for (long b = -wy; b <= wy; ++b) {
        if (iy + b < 0 || iy + b >= ny) continue;
        const long w = wx[b + wy];
        for (long a = std::max(-w, -ix); a <= std::min(w, nx - 1 - ix); ++a) {
          const std::size_t j = grid.index(static_cast<std::size_t>(ix + a), static_cast<std::size_t>(iy + b));
          if (!grid.masked(j) && blocked(grid, ci, grid.center(j))) hidden.push_back(j);
        }
      }
      if (hidden.empty()) continue;
      std::sort(hidden.begin(), hidden.end());
      hidden_dist.assign(hidden.size(), kInf);
      graph.run(i, limit, [&](std::size_t j, double d) {
        auto it = std::lower_bound(hidden.begin(), hidden.end(), j);
        if (it != hidden.end() && *it == j) hidden_dist[static_cast<std::size_t>(it - hidden.begin())] = d;
      });
      for (std::size_t t = 0; t < hidden.size(); ++t) {
        if (hidden_dist[t] == kInf) continue;
        auto [it, inserted] = detour.try_emplace(pair_key(i, hidden[t]), hidden_dist[t]);
        if (!inserted) it->second = std::min(it->second, hidden_dist[t]);
      }
    }
  }

  std::vector<double> private_vals;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.masked(i)) {
      builder.end_row();
      continue;
    }
    const Point ci = grid.center(i);
    const long ix = static_cast<long>(i) % nx;
    const long iy = static_cast<long>(i) / nx;
    for (long b = -wy; b <= wy; ++b) {
      if (iy + b < 0 || iy + b >= ny) continue;
      const long w = wx[b + wy];
      const long lo = std::max(-w, -ix);
      const long hi = std::min(w, nx - 1 - ix);
      const auto col_of = [&](long a) {
        return static_cast<std::uint32_t>(grid.index(static_cast<std::size_t>(ix + a), static_cast<std::size_t>(iy + b)));
      };
      if (!has_obstacles) {
        builder.add_shared_run(col_of(lo), static_cast<std::uint32_t>(hi - lo + 1),
                               profile_at[b + wy] + static_cast<std::uint64_t>(lo + w));
        continue;
      }
      // Split the stretch into visible runs (shared profile), detour runs
      // (private values) and gaps (masked or out of reach).
      long a = lo;
      while (a <= hi) {
        const std::size_t j = col_of(a);
        if (grid.masked(j)) {
          ++a;
          continue;
        }
        if (!blocked(grid, ci, grid.center(j))) {
          const long start = a;
          while (a <= hi && !grid.masked(col_of(a)) && !blocked(grid, ci, grid.center(col_of(a)))) ++a;
          builder.add_shared_run(col_of(start), static_cast<std::uint32_t>(a - start),
                                 profile_at[b + wy] + static_cast<std::uint64_t>(start + w));
          continue;
        }
        const long start = a;
        private_vals.clear();
        while (a <= hi) {
          const std::size_t jj = col_of(a);
          if (grid.masked(jj) || !blocked(grid, ci, grid.center(jj))) break;
          auto it = detour.find(pair_key(i, jj));
          if (it == detour.end() || it->second > limit) break;
          private_vals.push_back(it->second);
          ++a;
        }
        if (private_vals.empty()) {
          ++a;  // unreachable within the radius
          continue;
        }
        builder.add_run(col_of(start), private_vals);
      }
    }
    builder.end_row();
  }
  return builder.finish(true);
}

CostMatrix discrete_cost_matrix(const Grid& grid, const CostFunction& c, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("discrete_cost_matrix: tau must be positive");
  if (!(c.speed_limit > 0.0)) throw InvalidArgument("discrete_cost_matrix: speed limit must be positive");
  CostMatrix cm;
  cm.function = c;
  cm.tau = tau;
  cm.denominator = tau + grid.max_delta();
  const SegmentedMatrix dist = geodesic_distances(grid, cm.denominator * c.speed_limit);
  const double denom = cm.denominator;
  cm.cost = dist.map([&](double d) {
    // Pairs admitted through the radius slack sit on the unit sphere.
    const double v = std::min(d / (denom * c.speed_limit), 1.0);
    return 1.0 - std::sqrt(1.0 - v * v);
  });
  return cm;
}

GibbsKernel::GibbsKernel(SegmentedMatrix xi, std::optional<SegmentedMatrix> log_xi)
    : xi_(std::move(xi)), log_xi_(std::move(log_xi)) {
  if (xi_.rows() != xi_.cols()) throw InvalidArgument("GibbsKernel: matrix must be square");
  if (!xi_.symmetric()) {
    xi_t_ = xi_.transposed();
    if (log_xi_) log_xi_t_ = log_xi_->transposed();
  }
}

void GibbsKernel::apply_transpose(std::span<const double> x, std::span<double> y) const {
  (xi_t_ ? *xi_t_ : xi_).apply(x, y);
}

void GibbsKernel::apply_log(std::span<const double> x, std::span<double> y) const {
  if (!log_xi_) throw InvalidArgument("GibbsKernel: built without log values");
  log_xi_->apply_log(x, y);
}

void GibbsKernel::apply_transpose_log(std::span<const double> x, std::span<double> y) const {
  if (!log_xi_) throw InvalidArgument("GibbsKernel: built without log values");
  (log_xi_t_ ? *log_xi_t_ : *log_xi_).apply_log(x, y);
}

GibbsKernel gibbs_kernel(const CostMatrix& cm, double epsilon, double tau, bool with_log) {
  if (!(epsilon > 0.0)) throw InvalidArgument("gibbs_kernel: epsilon must be positive");
  if (!(tau > 0.0)) throw InvalidArgument("gibbs_kernel: tau must be positive");
  const double scale = tau / epsilon;
  SegmentedMatrix xi = cm.cost.map([scale](double c) { return std::exp(-scale * c); });
  std::optional<SegmentedMatrix> log_xi;
  if (with_log) log_xi = cm.cost.map([scale](double c) { return -scale * c; });
  return GibbsKernel(std::move(xi), std::move(log_xi));
}

}  // namespace rhe
