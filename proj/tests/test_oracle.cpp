#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "rhe/errors.hpp"
#include "rhe/oracle.hpp"
#include "support.hpp"

using namespace rhe;
using rhe::test::grid1d;

namespace {

struct Case {
  Grid grid;
  DensityVector r;
  CostMatrix cost;
  EnergyModel model = EnergyModel::power(2.0, 0.5);
  double eps = 0.5;
  double tau = 0.3;
};

Case make_case(std::uint64_t seed) {
  Case c;
  c.grid = grid1d(0.0, 1.0, 8);
  std::mt19937_64 rng(seed);
  std::vector<double> r(8);
  for (double& v : r) v = rhe::test::uniform(rng, 0.05, 1.0);
  c.r = DensityVector::normalized(c.grid, r);
  c.cost = discrete_cost_matrix(c.grid, CostFunction{1.0}, c.tau);
  return c;
}

}  // namespace

TEST_CASE("two independent dense methods agree on twenty instances") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    const Case c = make_case(seed);
    const oracle::DenseProblem p =
        oracle::make_jko_problem(c.r.values(), c.cost, c.model, c.eps, c.tau, c.grid.volumes());
    const oracle::OracleResult pg = oracle::projected_gradient(p);
    const oracle::OracleResult md = oracle::mirror_descent(p);
    CHECK(std::abs(pg.objective - md.objective) <= 1e-8);
    CHECK(oracle::plan_l1(pg.plan, md.plan, c.grid.volumes()) <= 1e-5);
    CHECK(oracle::kkt_residual(pg.plan, p) <= 1e-8);
    CHECK(oracle::kkt_residual(md.plan, p) <= 1e-8);
  }
}

TEST_CASE("oracle plans match the scaling iteration") {
  for (std::uint64_t seed = 101; seed <= 105; ++seed) {
    const Case c = make_case(seed);
    const GibbsKernel k = gibbs_kernel(c.cost, c.eps, c.tau);
    const JkoResult res = jko_step(c.grid, c.r, k, c.model, c.eps);
    const oracle::OracleResult ref =
        oracle::brute_force_jko(c.r.values(), c.cost, c.model, c.eps, c.tau, c.grid.volumes());
    CHECK(ref.objective <= res.report.objective + 1e-8);
    CHECK(ref.objective >= res.report.objective - 1e-8);
  }
}

TEST_CASE("single cell instance") {
  const Grid g = grid1d(0.0, 2.0, 1);
  const DensityVector r = DensityVector::normalized(g, {1.0});
  const CostMatrix cm = discrete_cost_matrix(g, CostFunction{1.0}, 0.3);
  const EnergyModel model = EnergyModel::power(2.0, 0.5);
  const oracle::OracleResult res = oracle::brute_force_jko(r.values(), cm, model, 0.5, 0.3, g.volumes());
  CHECK(res.plan.g[0] == doctest::Approx(0.25).epsilon(1e-14));
  // g differs from xi = 1 here, so the KL term does not vanish.
  const double kl = 4.0 * (0.25 * std::log(0.25) - 0.25 + 1.0);
  CHECK(res.objective == doctest::Approx(0.5 * kl + model.h(0.5) * 2.0).epsilon(1e-14));
  // On a unit cell the plan is xi itself and only the energy remains.
  const Grid unit = grid1d(0.0, 1.0, 1);
  const DensityVector ru = DensityVector::normalized(unit, {3.0});
  const oracle::OracleResult ou =
      oracle::brute_force_jko(ru.values(), discrete_cost_matrix(unit, CostFunction{1.0}, 0.3), model, 0.5, 0.3,
                              unit.volumes());
  CHECK(ou.plan.g[0] == 1.0);
  CHECK(ou.objective == doctest::Approx(model.h(1.0)).epsilon(1e-15));
  const oracle::DenseProblem p = oracle::make_jko_problem(r.values(), cm, model, 0.5, 0.3, g.volumes());
  CHECK(oracle::kkt_residual(res.plan, p) == 0.0);
}

TEST_CASE("symmetric two-cell instance has a symmetric optimum") {
  oracle::DenseProblem p;
  p.n = 2;
  p.reference = {1.0, 0.4, 0.4, 1.0};
  p.volumes = {0.5, 0.5};
  p.epsilon = 0.3;
  p.r_bar = std::vector<double>{1.0, 1.0};
  for (const oracle::OracleResult& res : {oracle::projected_gradient(p), oracle::mirror_descent(p)}) {
    CHECK(res.plan(0, 1) == doctest::Approx(res.plan(1, 0)).epsilon(1e-9));
    CHECK(res.plan(0, 0) == doctest::Approx(res.plan(1, 1)).epsilon(1e-9));
  }
}

TEST_CASE("a perturbed optimum has a visible KKT residual") {
  const Case c = make_case(7);
  const oracle::DenseProblem p = oracle::make_jko_problem(c.r.values(), c.cost, c.model, c.eps, c.tau, c.grid.volumes());
  const oracle::OracleResult res = oracle::projected_gradient(p);
  CHECK(oracle::kkt_residual(res.plan, p) <= 1e-8);
  oracle::DensePlan bumped = res.plan;
  bumped(2, 3) *= 1.1;
  // Re-project onto the row constraint by rescaling row 2.
  double row = 0.0;
  for (std::size_t j = 0; j < 8; ++j) row += c.grid.volume(j) * bumped(2, j);
  for (std::size_t j = 0; j < 8; ++j) bumped(2, j) *= c.r[2] / row;
  CHECK(oracle::kkt_residual(bumped, p) > 1e-4);
  CHECK(oracle::dense_objective(bumped, p) > res.objective);
}

TEST_CASE("unconstrained problems and input checks") {
  oracle::DenseProblem p;
  p.n = 3;
  p.reference = {1.0, 0.5, 0.0, 0.5, 1.0, 0.5, 0.0, 0.5, 1.0};
  p.volumes = {1.0, 1.0, 1.0};
  p.model = EnergyModel::boltzmann();
  p.epsilon = 1.0;
  const oracle::OracleResult a = oracle::projected_gradient(p);
  const oracle::OracleResult b = oracle::mirror_descent(p);
  CHECK(std::abs(a.objective - b.objective) <= 1e-8);
  CHECK(a.plan(0, 2) == 0.0);

  const Grid big = grid1d(0.0, 1.0, 13);
  const DensityVector r = project_density([](const Point&) { return 1.0; }, big);
  const CostMatrix cm = discrete_cost_matrix(big, CostFunction{1.0}, 0.3);
  CHECK_THROWS_AS(oracle::brute_force_jko(r.values(), cm, EnergyModel::power(2.0, 0.5), 0.5, 0.3, big.volumes()),
                  InvalidArgument);
}
