#include "rhe/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rhe/errors.hpp"

namespace rhe {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open for writing", path);
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed", path);
}

}  // namespace

void write_pgm(const DensityVector& r, const Grid& grid, const std::filesystem::path& path) {
  if (grid.dim() != 2) throw InvalidArgument("write_pgm: grid must be two-dimensional");
  if (r.size() != grid.size()) throw InvalidArgument("write_pgm: density does not match the grid");
  double max = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!grid.masked(i)) max = std::max(max, r[i]);
  }
  const std::size_t w = grid.nx();
  const std::size_t h = grid.ny();
  std::vector<unsigned char> pix(w * h, 0);
  for (std::size_t row = 0; row < h; ++row) {
    const std::size_t iy = h - 1 - row;
    for (std::size_t ix = 0; ix < w; ++ix) {
      const std::size_t i = grid.index(ix, iy);
      const double v = r[i];
      if (grid.masked(i) || !(v > 0.0)) continue;
      const double level = kPgmFloor + (255.0 - kPgmFloor) * (v / max);
      pix[row * w + ix] = static_cast<unsigned char>(std::clamp(std::lround(level), long{kPgmFloor}, 255L));
    }
  }
  std::ofstream out = open_out(path, true);
  out << "P5\n" << w << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(pix.data()), static_cast<std::streamsize>(pix.size()));
  finish(out, path);
}

PgmImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading", path);
  std::string magic;
  int maxval = 0;
  PgmImage img;
  in >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || maxval != 255) throw IoError("not an 8-bit P5 image", path);
  in.get();
  img.pixels.resize(img.width * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw IoError("truncated image", path);
  return img;
}

void write_csv_snapshot(const DensityVector& r, const Grid& grid, const std::filesystem::path& path) {
  if (r.size() != grid.size()) throw InvalidArgument("write_csv_snapshot: density does not match the grid");
  std::ofstream out = open_out(path);
  out << (grid.dim() == 1 ? "x,density\n" : "x,y,density\n");
  for (std::size_t i = 0; i < r.size(); ++i) {
    const Point c = grid.center(i);
    out << fmt(c[0]) << ',';
    if (grid.dim() == 2) out << fmt(c[1]) << ',';
    out << fmt(r[i]) << '\n';
  }
  finish(out, path);
}

std::vector<double> read_csv_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading", path);
  std::string line;
  std::getline(in, line);
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    values.push_back(std::strtod(line.c_str() + comma + 1, nullptr));
  }
  return values;
}

std::string trace_csv_header() {
  return "n,mass,energy,iterations,support_count,support_radius,x_marginal_residual";
}

std::string trace_csv_row(const FlowRecord& rec) {
  std::ostringstream s;
  s << rec.n << ',' << fmt(rec.mass) << ',' << fmt(rec.energy) << ',' << rec.report.iterations << ','
    << rec.support.size() << ',' << fmt(rec.support_radius) << ',' << fmt(rec.report.x_marginal_residual);
  return s.str();
}

void write_trace_csv(const FlowTrace& trace, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << trace_csv_header() << '\n';
  for (const auto& rec : trace.records) out << trace_csv_row(rec) << '\n';
  finish(out, path);
}

void write_kernel_csv(const GibbsKernel& kernel, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "i,j,value\n";
  const SegmentedMatrix& m = kernel.matrix();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    m.for_each_in_row(i, [&](std::size_t j, double v) { out << i << ',' << j << ',' << fmt(v) << '\n'; });
  }
  finish(out, path);
}

void write_scaling_csv(const ScalingState& state, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "i,log_alpha,log_beta\n";
  const std::vector<double> la = state.log_alpha();
  const std::vector<double> lb = state.log_beta();
  for (std::size_t i = 0; i < la.size(); ++i) out << i << ',' << fmt(la[i]) << ',' << fmt(lb[i]) << '\n';
  finish(out, path);
}

}  // namespace rhe
