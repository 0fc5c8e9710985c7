#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace rhe {

using Point = std::array<double, 2>;

/// Axis-aligned box. In one dimension only the first coordinate is used.
struct Box {
  Point lo{0.0, 0.0};
  Point hi{0.0, 0.0};
  bool operator==(const Box&) const = default;
};

/// Uniform tesselation of a box in one or two dimensions.
///
/// Cells are numbered row-major with the first axis running fastest, so
/// index = iy * nx + ix. Masked cells stay in the numbering but are removed
/// from the admissible state space: they carry no density and no kernel
/// support.
class Grid {
 public:
  Grid() = default;

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return volumes_.size(); }
  std::size_t nx() const noexcept { return static_cast<std::size_t>(resolution_[0]); }
  std::size_t ny() const noexcept { return static_cast<std::size_t>(resolution_[1]); }
  const std::array<int, 2>& resolution() const noexcept { return resolution_; }
  const Point& domain_min() const noexcept { return lo_; }
  const Point& domain_max() const noexcept { return hi_; }
  const Point& delta() const noexcept { return delta_; }
  /// Largest cell edge; enters the modified transport denominator tau + delta.
  double max_delta() const noexcept;

  Point center(std::size_t i) const noexcept;
  std::size_t index(std::size_t ix, std::size_t iy) const noexcept { return iy * nx() + ix; }

  std::span<const double> volumes() const noexcept { return volumes_; }
  double volume(std::size_t i) const noexcept { return volumes_[i]; }

  bool masked(std::size_t i) const noexcept { return mask_[i] != 0; }
  std::size_t masked_count() const noexcept;
  const std::vector<Box>& obstacles() const noexcept { return obstacles_; }

  friend Grid build_uniform_grid(std::span<const double>, std::span<const double>,
                                 std::span<const int>);
  friend Grid apply_obstacle(const Grid&, std::span<const Box>);

 private:
  int dim_ = 1;
  Point lo_{0.0, 0.0};
  Point hi_{1.0, 1.0};
  Point delta_{1.0, 1.0};
  std::array<int, 2> resolution_{1, 1};
  std::vector<double> volumes_;
  std::vector<std::uint8_t> mask_;
  std::vector<Box> obstacles_;
};

Grid build_uniform_grid(std::span<const double> domain_min, std::span<const double> domain_max,
                        std::span<const int> resolution);

/// Masks every cell whose center lies in one of the boxes (closed, with a
/// 1e-9 relative slack so centers sitting on a box face are masked
/// regardless of rounding).
Grid apply_obstacle(const Grid& grid, std::span<const Box> regions);

/// Closed-box membership used for masking and line-of-sight tests.
bool point_in_box(const Point& p, const Box& box, int dim) noexcept;

/// True if the closed segment [a, b] meets the (slightly inflated) box.
bool segment_hits_box(const Point& a, const Point& b, const Box& box, int dim) noexcept;

/// Piecewise-constant density, r_i on cell i, with unit total mass.
class DensityVector {
 public:
  DensityVector() = default;

  /// Validates nonnegativity and zero density on masked cells, then
  /// rescales to unit mass.
  static DensityVector normalized(const Grid& grid, std::vector<double> values);

  /// Wraps values that are already normalized; only checks shape and sign.
  static DensityVector from_normalized(const Grid& grid, std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

 private:
  std::vector<double> values_;
};

/// Sum_i r_i |Q_i|.
double total_mass(std::span<const double> r, std::span<const double> volumes) noexcept;

using Sampler = std::function<double(const Point&)>;

/// Midpoint-rule cell averages of the sampler, renormalized to unit mass.
DensityVector project_density(const Sampler& sampler, const Grid& grid);

}  // namespace rhe
