#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "rhe/cost.hpp"
#include "rhe/errors.hpp"
#include "support.hpp"

using namespace rhe;
using rhe::test::grid1d;
using rhe::test::grid2d;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool sees(const Grid& g, const Point& a, const Point& b) {
  for (const Box& box : g.obstacles()) {
    if (segment_hits_box(a, b, box, g.dim())) return false;
  }
  return true;
}

// All-pairs reference: Euclidean distance on a clear line of sight, else
// O(V^2) Dijkstra over the full adjacency matrix of the three-cell stencil.
std::vector<double> dense_geodesics(const Grid& g) {
  const std::size_t n = g.size();
  std::vector<double> w(n * n, kInf);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || g.masked(i) || g.masked(j)) continue;
      const long dx = static_cast<long>(i % g.nx()) - static_cast<long>(j % g.nx());
      const long dy = static_cast<long>(i / g.nx()) - static_cast<long>(j / g.nx());
      if (std::labs(dx) > 3 || std::labs(dy) > 3) continue;
      const Point a = g.center(i), b = g.center(j);
      if (sees(g, a, b)) w[i * n + j] = std::hypot(a[0] - b[0], a[1] - b[1]);
    }
  }
  std::vector<double> out(n * n, kInf);
  for (std::size_t s = 0; s < n; ++s) {
    if (g.masked(s)) continue;
    std::vector<double> d(n, kInf);
    std::vector<bool> done(n, false);
    d[s] = 0.0;
    for (;;) {
      std::size_t u = n;
      for (std::size_t k = 0; k < n; ++k) {
        if (!done[k] && d[k] < kInf && (u == n || d[k] < d[u])) u = k;
      }
      if (u == n) break;
      done[u] = true;
      for (std::size_t k = 0; k < n; ++k) {
        if (w[u * n + k] < kInf && d[u] + w[u * n + k] < d[k]) d[k] = d[u] + w[u * n + k];
      }
    }
    for (std::size_t t = 0; t < n; ++t) {
      if (g.masked(t)) continue;
      const Point a = g.center(s), b = g.center(t);
      out[s * n + t] = sees(g, a, b) ? std::hypot(a[0] - b[0], a[1] - b[1]) : d[t];
    }
  }
  return out;
}

}  // namespace

TEST_CASE("relativistic cost values") {
  const CostFunction c{1.0};
  CHECK(eval_cost(c, 0.0) == 0.0);
  CHECK(eval_cost(c, 1.0) == 1.0);
  CHECK(eval_cost(c, 0.6) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(eval_cost(c, -0.6) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(eval_cost(c, 1.0 + 1e-12) == kInf);
  const double v[2] = {0.36, 0.48};
  CHECK(eval_cost(c, v) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(eval_cost(CostFunction{2.0}, 1.2) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("obstacle-free 1D distances are index gaps") {
  const Grid g = grid1d(0.0, 1.0, 40);
  const double delta = g.delta()[0];
  const SegmentedMatrix d = geodesic_distances(g, 0.3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double gap = std::abs(static_cast<double>(i) - static_cast<double>(j)) * delta;
      const double* p = d.find(i, j);
      if (gap <= 0.3 - 1e-9) {
        REQUIRE(p != nullptr);
        CHECK(*p == doctest::Approx(gap).epsilon(1e-13));
      } else if (gap > 0.3 + 1e-9) {
        CHECK(p == nullptr);
      }
    }
  }
}

TEST_CASE("geodesics around walls match a dense Dijkstra reference") {
  const Grid base = grid2d({0.0, 0.0}, {1.0, 1.0}, 14, 14);
  const std::vector<Box> walls = {Box{{0.45, 0.2}, {0.55, 1.0}}, Box{{0.1, 0.3}, {0.3, 0.36}}};
  const Grid g = apply_obstacle(base, walls);
  REQUIRE(g.masked_count() > 0);
  const double radius = 0.9;
  const SegmentedMatrix d = geodesic_distances(g, radius);
  const std::vector<double> ref = dense_geodesics(g);
  const std::size_t n = g.size();
  std::size_t detours = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double* p = d.find(i, j);
      const double r = ref[i * n + j];
      if (g.masked(i) || g.masked(j)) {
        CHECK(p == nullptr);
        continue;
      }
      if (r <= radius * (1.0 - 1e-9)) {
        REQUIRE(p != nullptr);
        CHECK(*p == doctest::Approx(r).epsilon(1e-12));
        if (!sees(g, g.center(i), g.center(j))) ++detours;
      } else if (r > radius * (1.0 + 1e-9)) {
        CHECK(p == nullptr);
      }
      if (p) {
        const double* q = d.find(j, i);
        REQUIRE(q != nullptr);
        CHECK(*p == *q);
      }
    }
  }
  CHECK(detours > 0);
}

TEST_CASE("cells across a wall get the around-path, visible pairs stay Euclidean") {
  const Grid g = apply_obstacle(grid2d({0.0, 0.0}, {1.0, 1.0}, 10, 10),
                                std::vector<Box>{Box{{0.45, 0.0}, {0.55, 0.6}}});
  const std::size_t a = g.index(3, 1), b = g.index(6, 1);
  const std::size_t c = g.index(0, 9), e = g.index(9, 9);
  const SegmentedMatrix d = geodesic_distances(g, 3.0);
  const std::vector<double> ref = dense_geodesics(g);
  REQUIRE(d.find(a, b) != nullptr);
  CHECK(*d.find(a, b) == doctest::Approx(ref[a * g.size() + b]).epsilon(1e-12));
  CHECK(*d.find(a, b) > 0.3 + 0.6);
  // The continuous geodesic bounds the graph path from below.
  const std::vector<double> vis = rhe::test::visibility_distances({g.center(a)}, {g.center(b)}, g.obstacles());
  CHECK(*d.find(a, b) >= vis[0] - 1e-12);
  CHECK(*d.find(c, e) == doctest::Approx(0.9).epsilon(1e-14));
}

TEST_CASE("cost matrix entries") {
  // 1D, delta = 0.01, tau = 1: gap 0.606 gives C(0.6) = 0.2.
  const Grid g = grid1d(0.0, 10.0, 1000);
  const CostMatrix cm = discrete_cost_matrix(g, CostFunction{1.0}, 1.0);
  CHECK(cm.denominator == doctest::Approx(1.01).epsilon(1e-15));
  CHECK(*cm.cost.find(100, 100) == 0.0);
  REQUIRE(cm.cost.find(100, 201) != nullptr);
  CHECK(*cm.cost.find(100, 201) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cm.cost.find(100, 202) == nullptr);
  CHECK(eval_cost(cm.function, 0.606 / cm.denominator) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(*cm.cost.find(500, 560) == doctest::Approx(eval_cost(cm.function, 0.6 / 1.01)).epsilon(1e-13));
  // Row support is at most the cells within (tau + delta) * speed.
  for (std::size_t i : {0u, 1u, 500u, 999u}) CHECK(cm.cost.pattern().row_nnz(i) <= 203);
}

TEST_CASE("obstacle-free 2D costs equal the closed form") {
  const Grid g = grid2d({-1.0, -1.0}, {1.0, 1.0}, 20, 24);
  const double tau = 0.4;
  const CostFunction f{1.5};
  const CostMatrix cm = discrete_cost_matrix(g, f, tau);
  const double den = tau + g.max_delta();
  auto ix = [&](std::size_t k) { return static_cast<long>(k % g.nx()); };
  auto iy = [&](std::size_t k) { return static_cast<long>(k / g.nx()); };
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double dist = std::hypot(static_cast<double>(ix(i) - ix(j)) * g.delta()[0],
                                     static_cast<double>(iy(i) - iy(j)) * g.delta()[1]);
      const double want = eval_cost(f, dist / den);
      const double* p = cm.cost.find(i, j);
      if (want < kInf && dist < den * 1.5 * (1 - 1e-9)) {
        REQUIRE(p != nullptr);
        CHECK(std::abs(*p - want) <= 1e-15);
      } else if (want == kInf) {
        CHECK(p == nullptr);
      }
    }
  }
}

TEST_CASE("cost is nondecreasing in distance along each row") {
  const Grid g = apply_obstacle(grid2d({0.0, 0.0}, {2.0, 2.0}, 30, 30),
                                std::vector<Box>{Box{{0.9, 0.2}, {1.1, 1.8}}});
  const CostMatrix cm = discrete_cost_matrix(g, CostFunction{1.0}, 0.5);
  const SegmentedMatrix d = geodesic_distances(g, cm.denominator);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t i = rng() % g.size();
    if (g.masked(i)) continue;
    std::vector<std::pair<double, double>> pairs;
    cm.cost.for_each_in_row(i, [&](std::size_t j, double c) { pairs.push_back({*d.find(i, j), c}); });
    std::sort(pairs.begin(), pairs.end());
    for (std::size_t k = 1; k < pairs.size(); ++k) CHECK(pairs[k].second >= pairs[k - 1].second);
  }
}

TEST_CASE("Gibbs kernel values") {
  const Grid g = grid1d(0.0, 10.0, 1000);
  const CostMatrix cm = discrete_cost_matrix(g, CostFunction{1.0}, 1.0);
  const GibbsKernel k = gibbs_kernel(cm, 0.5, 1.0, true);
  CHECK(*k.matrix().find(7, 7) == 1.0);
  const double c560 = *cm.cost.find(500, 560);
  CHECK(*k.matrix().find(500, 560) == doctest::Approx(std::exp(-2.0 * c560)).epsilon(1e-15));
  CHECK(std::exp(-0.4) == doctest::Approx(0.670320).epsilon(1e-6));
  CHECK(k.matrix().find(0, 500) == nullptr);
  CHECK(k.has_log());
  // Transposed products agree with the symmetric kernel.
  std::vector<double> x(1000), y(1000), yt(1000);
  for (std::size_t i = 0; i < 1000; ++i) x[i] = 1.0 + std::sin(0.1 * static_cast<double>(i));
  k.apply(x, y);
  k.apply_transpose(x, yt);
  for (std::size_t i = 0; i < 1000; ++i) CHECK(yt[i] == doctest::Approx(y[i]).epsilon(1e-14));
}

TEST_CASE("invalid cost arguments") {
  const Grid g = grid1d(0.0, 1.0, 4);
  CHECK_THROWS_AS(geodesic_distances(g, -1.0), InvalidArgument);
  CHECK_THROWS_AS(discrete_cost_matrix(g, CostFunction{1.0}, 0.0), InvalidArgument);
  CHECK_THROWS_AS(discrete_cost_matrix(g, CostFunction{0.0}, 1.0), InvalidArgument);
}
