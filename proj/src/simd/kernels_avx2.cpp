#include <immintrin.h>

#include "kernels_internal.hpp"
#include "rhe/simd/kernels.hpp"

namespace rhe::simd {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t t = 0;
  for (; t + 16 <= n; t += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + t), _mm256_loadu_pd(b + t), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + t + 4), _mm256_loadu_pd(b + t + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + t + 8), _mm256_loadu_pd(b + t + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + t + 12), _mm256_loadu_pd(b + t + 12), acc3);
  }
  for (; t + 4 <= n; t += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + t), _mm256_loadu_pd(b + t), acc0);
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; t < n; ++t) s += a[t] * b[t];
  return s;
}

double dot_entry(const double* a, const double* b, std::size_t n) { return dot_avx2(a, b, n); }

void matvec_avx2(const RunPattern& pattern, const double* pool, const double* x, double* y,
                 std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i < end; ++i) {
    // Short runs dominate in 1D and near masks; accumulate them in one register.
    __m256d acc = _mm256_setzero_pd();
    double tail = 0.0;
    for (const Run& run : pattern.row(i)) {
      const double* p = pool + run.offset;
      const double* xs = x + run.col;
      const std::size_t n = run.len;
      if (n >= 16) {
        tail += dot_avx2(p, xs, n);
        continue;
      }
      std::size_t t = 0;
      for (; t + 4 <= n; t += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(p + t), _mm256_loadu_pd(xs + t), acc);
      }
      for (; t < n; ++t) tail += p[t] * xs[t];
    }
    y[i] = hsum(acc) + tail;
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{Isa::avx2, "avx2", &dot_entry, &matvec_avx2,
                                 &detail::log_matvec_scalar};
  return table;
}

}  // namespace rhe::simd
