#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "rhe/io.hpp"
#include "support.hpp"

using namespace rhe;
using rhe::test::grid1d;
using rhe::test::grid2d;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rhe_io_test";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("PGM gray levels") {
  const Grid g = grid2d({0.0, 0.0}, {1.0, 2.0}, 4, 6);
  const fs::path p = scratch("a.pgm");

  write_pgm(DensityVector::from_normalized(g, std::vector<double>(g.size(), 0.0)), g, p);
  PgmImage img = read_pgm(p);
  CHECK(img.width == 4);
  CHECK(img.height == 6);
  for (unsigned char px : img.pixels) CHECK(px == 0);

  write_pgm(project_density([](const Point&) { return 1.0; }, g), g, p);
  img = read_pgm(p);
  for (unsigned char px : img.pixels) CHECK(px == 255);

  // Top image row holds the largest ordinate.
  std::vector<double> v(g.size(), 0.0);
  v[g.index(1, 5)] = 2.0;
  v[g.index(2, 0)] = 1.0;
  write_pgm(DensityVector::normalized(g, v), g, p);
  img = read_pgm(p);
  CHECK(img.pixels[0 * 4 + 1] == 255);
  CHECK(img.pixels[5 * 4 + 2] == kPgmFloor + 104);
  CHECK(img.pixels[0] == 0);
}

TEST_CASE("PGM of a ball datum shows exactly its support") {
  const Grid g = apply_obstacle(grid2d({-1.0, -3.0}, {1.0, 3.0}, 50, 150),
                                std::vector<Box>{Box{{-0.5, -2.0}, {0.5, -1.9}}});
  const DensityVector r =
      project_density([](const Point& p) { return std::hypot(p[0], p[1] + 2.8) <= 0.8 ? 1.0 : 0.0; }, g);
  const fs::path p = scratch("ball.pgm");
  write_pgm(r, g, p);
  const PgmImage img = read_pgm(p);
  std::size_t lit = 0, support = 0;
  for (std::size_t iy = 0; iy < g.ny(); ++iy) {
    for (std::size_t ix = 0; ix < g.nx(); ++ix) {
      const unsigned char px = img.pixels[(g.ny() - 1 - iy) * g.nx() + ix];
      const std::size_t i = g.index(ix, iy);
      if (r[i] > 0.0) {
        ++support;
        CHECK(px == 255);
      } else {
        CHECK(px == 0);
      }
      if (px > 0) ++lit;
    }
  }
  CHECK(lit == support);
  CHECK(support > 0);
}

TEST_CASE("CSV snapshots") {
  const Grid one = grid1d(0.0, 1.0, 1);
  const fs::path p = scratch("one.csv");
  write_csv_snapshot(DensityVector::normalized(one, {1.0}), one, p);
  std::vector<std::string> l = lines_of(p);
  REQUIRE(l.size() == 2);
  CHECK(l[0] == "x,density");

  const Grid border = grid1d(0.0, 10.0, 1000);
  const DensityVector u = project_density([](const Point&) { return 1.0; }, border);
  write_csv_snapshot(u, border, p);
  l = lines_of(p);
  CHECK(l.size() == 1001);
  const std::vector<double> back = read_csv_snapshot(p);
  REQUIRE(back.size() == 1000);
  for (double v : back) CHECK(v == doctest::Approx(0.1).epsilon(1e-13));

  const Grid g2 = grid2d({0.0, 0.0}, {1.0, 1.0}, 5, 7);
  std::mt19937_64 rng(17);
  std::vector<double> vals(g2.size());
  for (double& v : vals) v = rhe::test::uniform01(rng) * std::pow(10.0, rhe::test::uniform(rng, -300.0, 5.0));
  vals[3] = 0.0;
  const DensityVector r = DensityVector::normalized(g2, vals);
  write_csv_snapshot(r, g2, p);
  CHECK(lines_of(p)[0] == "x,y,density");
  const std::vector<double> r2 = read_csv_snapshot(p);
  REQUIRE(r2.size() == r.size());
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::memcmp(&r2[i], &r.values()[i], sizeof(double)) == 0);
}

TEST_CASE("trace, kernel and scaling tables") {
  CHECK(trace_csv_header() == "n,mass,energy,iterations,support_count,support_radius,x_marginal_residual");
  const Grid g = grid1d(0.0, 1.0, 6);
  const DensityVector r0 = project_density([](const Point& p) { return p[0] < 0.5 ? 1.0 : 0.0; }, g);
  FlowOptions opt;
  std::size_t states = 0;
  opt.on_state = [&](std::size_t n, const ScalingState& s) {
    ++states;
    const fs::path sp = scratch("scaling.csv");
    write_scaling_csv(s, sp);
    const std::vector<std::string> l = lines_of(sp);
    CHECK(l[0] == "i,log_alpha,log_beta");
    CHECK(l.size() == 7);
    CHECK(n >= 1);
  };
  const FlowTrace t = run_flow(g, CostFunction{1.0}, EnergyModel::power(2.0, 0.5), 0.5, 0.2, 2, r0, opt);
  CHECK(states == 2);
  const fs::path tp = scratch("trace.csv");
  write_trace_csv(t, tp);
  const std::vector<std::string> l = lines_of(tp);
  REQUIRE(l.size() == 4);
  CHECK(l[0] == trace_csv_header());
  CHECK(l[1] == trace_csv_row(t.records[0]));
  CHECK(l[2].rfind("1,", 0) == 0);

  const GibbsKernel k = gibbs_kernel(discrete_cost_matrix(g, CostFunction{1.0}, 0.2), 0.5, 0.2);
  const fs::path kp = scratch("kernel.csv");
  write_kernel_csv(k, kp);
  const std::vector<std::string> kl = lines_of(kp);
  CHECK(kl[0] == "i,j,value");
  CHECK(kl.size() == k.matrix().nnz() + 1);
}

TEST_CASE("I/O failures carry the path") {
  CHECK_THROWS_AS(read_pgm("/nonexistent/dir/x.pgm"), IoError);
  CHECK_THROWS_AS(read_csv_snapshot("/nonexistent/dir/x.csv"), IoError);
  const Grid g = grid1d(0.0, 1.0, 2);
  try {
    write_csv_snapshot(DensityVector::normalized(g, {1.0, 1.0}), g, "/nonexistent/dir/x.csv");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(e.path() == fs::path("/nonexistent/dir/x.csv"));
  }
  const fs::path bad = scratch("bad.pgm");
  std::ofstream(bad) << "P2\n1 1\n255\n0\n";
  CHECK_THROWS_AS(read_pgm(bad), IoError);
}
