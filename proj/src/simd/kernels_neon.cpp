#include <arm_neon.h>

#include "kernels_internal.hpp"
#include "rhe/simd/kernels.hpp"

namespace rhe::simd {

namespace {

inline double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  float64x2_t acc2 = vdupq_n_f64(0.0);
  float64x2_t acc3 = vdupq_n_f64(0.0);
  std::size_t t = 0;
  for (; t + 8 <= n; t += 8) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + t), vld1q_f64(b + t));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + t + 2), vld1q_f64(b + t + 2));
    acc2 = vfmaq_f64(acc2, vld1q_f64(a + t + 4), vld1q_f64(b + t + 4));
    acc3 = vfmaq_f64(acc3, vld1q_f64(a + t + 6), vld1q_f64(b + t + 6));
  }
  for (; t + 2 <= n; t += 2) acc0 = vfmaq_f64(acc0, vld1q_f64(a + t), vld1q_f64(b + t));
  double s = vaddvq_f64(vaddq_f64(vaddq_f64(acc0, acc1), vaddq_f64(acc2, acc3)));
  for (; t < n; ++t) s += a[t] * b[t];
  return s;
}

double dot_entry(const double* a, const double* b, std::size_t n) { return dot_neon(a, b, n); }

void matvec_neon(const RunPattern& pattern, const double* pool, const double* x, double* y,
                 std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i < end; ++i) {
    double s = 0.0;
    for (const Run& run : pattern.row(i)) s += dot_neon(pool + run.offset, x + run.col, run.len);
    y[i] = s;
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{Isa::neon, "neon", &dot_entry, &matvec_neon,
                                 &detail::log_matvec_scalar};
  return table;
}

}  // namespace rhe::simd
