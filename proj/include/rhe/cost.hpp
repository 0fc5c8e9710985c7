#pragma once

#include <optional>
#include <span>

#include "rhe/grid.hpp"
#include "rhe/sparse.hpp"

namespace rhe {

/// Relativistic (flux-limiting) cost C(v) = 1 - sqrt(1 - |v / c|^2) for
/// |v| <= c and +inf beyond, with c the speed limit.
struct CostFunction {
  double speed_limit = 1.0;
};

double eval_cost(const CostFunction& c, double speed) noexcept;
double eval_cost(const CostFunction& c, std::span<const double> velocity) noexcept;

/// Relative slack on the truncation radius so pairs exactly at distance
/// (tau + delta) * speed_limit survive rounding of the cell centers.
inline constexpr double kRadiusSlack = 1e-12;

/// Pairwise geodesic distances between unmasked cell centers, stored only
/// up to `radius`. Pairs with a clear line of sight get the Euclidean
/// distance; blocked pairs get the shortest path on the center graph whose
/// edges join centers at most three cells apart per axis and avoid every
/// obstacle box. The table is exactly symmetric.
SegmentedMatrix geodesic_distances(const Grid& grid, double radius);

struct CostMatrix {
  SegmentedMatrix cost;  // absent entries are +inf
  CostFunction function;
  double tau = 0.0;
  double denominator = 0.0;  // tau + max cell edge
};

/// c_ij = C(d(x_i, x_j) / (tau + delta)); entries beyond the speed limit are absent.
CostMatrix discrete_cost_matrix(const Grid& grid, const CostFunction& c, double tau);

/// Gibbs kernel xi_ij = exp(-(tau / epsilon) c_ij) on the cost pattern.
/// Underflowed entries stay stored as zeros.
class GibbsKernel {
 public:
  GibbsKernel() = default;
  /// `log_xi` is optional; it enables the log-domain iteration.
  explicit GibbsKernel(SegmentedMatrix xi, std::optional<SegmentedMatrix> log_xi = std::nullopt);

  const SegmentedMatrix& matrix() const noexcept { return xi_; }
  std::size_t size() const noexcept { return xi_.rows(); }
  bool has_log() const noexcept { return log_xi_.has_value(); }

  void apply(std::span<const double> x, std::span<double> y) const { xi_.apply(x, y); }
  void apply_transpose(std::span<const double> x, std::span<double> y) const;
  void apply_log(std::span<const double> x, std::span<double> y) const;
  void apply_transpose_log(std::span<const double> x, std::span<double> y) const;

 private:
  SegmentedMatrix xi_;
  std::optional<SegmentedMatrix> xi_t_;
  std::optional<SegmentedMatrix> log_xi_;
  std::optional<SegmentedMatrix> log_xi_t_;
};

GibbsKernel gibbs_kernel(const CostMatrix& cm, double epsilon, double tau, bool with_log = false);

}  // namespace rhe
