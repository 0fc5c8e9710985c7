#include <cmath>
#include <limits>

#include "kernels_internal.hpp"
#include "rhe/simd/kernels.hpp"

namespace rhe::simd {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t t = 0; t < n; ++t) s += a[t] * b[t];
  return s;
}

void matvec_scalar(const RunPattern& pattern, const double* pool, const double* x, double* y,
                   std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i < end; ++i) {
    double s = 0.0;
    for (const Run& run : pattern.row(i)) s += dot_scalar(pool + run.offset, x + run.col, run.len);
    y[i] = s;
  }
}

}  // namespace

namespace detail {

void log_matvec_scalar(const RunPattern& pattern, const double* log_pool, const double* log_x,
                       double* log_y, std::size_t begin, std::size_t end) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  for (std::size_t i = begin; i < end; ++i) {
    double m = neg_inf;
    for (const Run& run : pattern.row(i)) {
      const double* lp = log_pool + run.offset;
      const double* lx = log_x + run.col;
      for (std::uint32_t t = 0; t < run.len; ++t) {
        const double v = lp[t] + lx[t];
        if (v > m) m = v;
      }
    }
    if (m == neg_inf) {
      log_y[i] = neg_inf;
      continue;
    }
    double s = 0.0;
    for (const Run& run : pattern.row(i)) {
      const double* lp = log_pool + run.offset;
      const double* lx = log_x + run.col;
      for (std::uint32_t t = 0; t < run.len; ++t) s += std::exp(lp[t] + lx[t] - m);
    }
    log_y[i] = m + std::log(s);
  }
}

}  // namespace detail

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::scalar, "scalar", &dot_scalar, &matvec_scalar,
                                 &detail::log_matvec_scalar};
  return table;
}

}  // namespace rhe::simd
