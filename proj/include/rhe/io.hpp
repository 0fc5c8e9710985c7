#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rhe/cost.hpp"
#include "rhe/flow.hpp"
#include "rhe/grid.hpp"
#include "rhe/solver.hpp"

namespace rhe {

class IoError : public std::runtime_error {
 public:
  IoError(const std::string& what, std::filesystem::path path)
      : std::runtime_error(what + ": " + path.string()), path_(std::move(path)) {}
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

/// Gray level 0 for zero density and masked cells; positive values map
/// affinely from (0, max] onto [kPgmFloor, 255].
inline constexpr int kPgmFloor = 48;

/// Binary P5 image, one pixel per cell, top row at the largest ordinate.
void write_pgm(const DensityVector& r, const Grid& grid, const std::filesystem::path& path);

struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<unsigned char> pixels;
};
PgmImage read_pgm(const std::filesystem::path& path);

/// "x,density" (1D) or "x,y,density" (2D), one row per cell, %.17g.
void write_csv_snapshot(const DensityVector& r, const Grid& grid, const std::filesystem::path& path);
/// Density column of a snapshot written by write_csv_snapshot.
std::vector<double> read_csv_snapshot(const std::filesystem::path& path);

/// Header plus one row per record:
/// n,mass,energy,iterations,support_count,support_radius,x_marginal_residual
void write_trace_csv(const FlowTrace& trace, const std::filesystem::path& path);
std::string trace_csv_header();
std::string trace_csv_row(const FlowRecord& record);

/// Stored kernel entries as "i,j,value".
void write_kernel_csv(const GibbsKernel& kernel, const std::filesystem::path& path);

/// "i,log_alpha,log_beta" for restart and inspection.
void write_scaling_csv(const ScalingState& state, const std::filesystem::path& path);

}  // namespace rhe
