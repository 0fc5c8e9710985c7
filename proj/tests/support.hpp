#pragma once

// Helpers shared by the test programs. Nothing here calls into the sparse
// kernel or solver code, so the reference computations stay independent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <random>
#include <vector>

#include "rhe/grid.hpp"

namespace rhe::test {

/// Uniform [0, 1) from a fixed-width generator, so draws agree across
/// standard libraries (std::uniform_real_distribution does not).
inline double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& g, double lo, double hi) { return lo + (hi - lo) * uniform01(g); }

inline Grid grid1d(double lo, double hi, int n) {
  const double a[1] = {lo};
  const double b[1] = {hi};
  const int r[1] = {n};
  return build_uniform_grid(a, b, r);
}

inline Grid grid2d(Point lo, Point hi, int nx, int ny) {
  const double a[2] = {lo[0], lo[1]};
  const double b[2] = {hi[0], hi[1]};
  const int r[2] = {nx, ny};
  return build_uniform_grid(a, b, r);
}

/// True if the open segment (p, q) passes through the open interior of the
/// box. Paths may graze faces and corners.
inline bool crosses_interior(const Point& p, const Point& q, const Box& b) {
  double t0 = 0.0, t1 = 1.0;
  for (int a = 0; a < 2; ++a) {
    const double d = q[a] - p[a];
    if (d == 0.0) {
      if (!(p[a] > b.lo[a] && p[a] < b.hi[a])) return false;
      continue;
    }
    double ta = (b.lo[a] - p[a]) / d;
    double tb = (b.hi[a] - p[a]) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (!(t0 < t1)) return false;
  }
  return t0 < t1;
}

/// Shortest obstacle-avoiding distance from any source point to each
/// target point, by Dijkstra on the dense visibility graph over sources,
/// box corners and targets.
inline std::vector<double> visibility_distances(const std::vector<Point>& sources,
                                                const std::vector<Point>& targets,
                                                const std::vector<Box>& boxes) {
  std::vector<Point> v;
  for (const Box& b : boxes) {
    v.push_back({b.lo[0], b.lo[1]});
    v.push_back({b.hi[0], b.lo[1]});
    v.push_back({b.lo[0], b.hi[1]});
    v.push_back({b.hi[0], b.hi[1]});
  }
  const std::size_t corners = v.size();
  v.insert(v.end(), targets.begin(), targets.end());
  const double inf = std::numeric_limits<double>::infinity();
  auto visible = [&](const Point& p, const Point& q) {
    for (const Box& b : boxes) {
      if (crosses_interior(p, q, b)) return false;
    }
    return true;
  };
  // Sources enter only as initial labels: dist(v) = min over sources in sight.
  std::vector<double> dist(v.size(), inf);
  for (std::size_t k = 0; k < v.size(); ++k) {
    for (const Point& s : sources) {
      const double d = std::hypot(v[k][0] - s[0], v[k][1] - s[1]);
      if (d < dist[k] && visible(s, v[k])) dist[k] = d;
    }
  }
  std::vector<bool> done(v.size(), false);
  for (std::size_t iter = 0; iter < v.size(); ++iter) {
    std::size_t best = v.size();
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!done[k] && (best == v.size() || dist[k] < dist[best])) best = k;
    }
    if (best == v.size() || dist[best] == inf) break;
    done[best] = true;
    if (best >= corners) continue;  // targets are sinks
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (done[k]) continue;
      const double d = dist[best] + std::hypot(v[k][0] - v[best][0], v[k][1] - v[best][1]);
      if (d < dist[k] && visible(v[best], v[k])) dist[k] = d;
    }
  }
  return {dist.begin() + static_cast<std::ptrdiff_t>(corners), dist.end()};
}

}  // namespace rhe::test
