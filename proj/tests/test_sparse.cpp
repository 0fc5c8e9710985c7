#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "rhe/errors.hpp"
#include "rhe/simd/kernels.hpp"
#include "rhe/sparse.hpp"
#include "support.hpp"

using namespace rhe;
using rhe::test::uniform;

namespace {

struct Dense {
  std::size_t rows, cols;
  std::vector<double> a;
  std::vector<std::uint8_t> present;
};

Dense random_dense(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double fill) {
  Dense d{rows, cols, std::vector<double>(rows * cols, 0.0), std::vector<std::uint8_t>(rows * cols, 0)};
  for (std::size_t k = 0; k < rows * cols; ++k) {
    if (rhe::test::uniform01(rng) < fill) {
      d.present[k] = 1;
      d.a[k] = uniform(rng, 0.0, 2.0);
    }
  }
  return d;
}

std::vector<double> dense_apply(const Dense& d, const std::vector<double>& x) {
  std::vector<double> y(d.rows, 0.0);
  for (std::size_t i = 0; i < d.rows; ++i) {
    long double s = 0.0L;
    for (std::size_t j = 0; j < d.cols; ++j) {
      if (d.present[i * d.cols + j]) s += static_cast<long double>(d.a[i * d.cols + j]) * x[j];
    }
    y[i] = static_cast<double>(s);
  }
  return y;
}

// Banded pattern with shared profiles, mimicking a translation-invariant kernel,
// with band widths chosen to exercise vector tails of every length.
SegmentedMatrix banded(std::size_t n, std::size_t half, std::mt19937_64& rng) {
  RunPatternBuilder b(n, n);
  std::vector<double> profile(2 * half + 1);
  for (std::size_t t = 0; t <= half; ++t) profile[half - t] = profile[half + t] = uniform(rng, 0.1, 1.0);
  const std::uint64_t off = b.add_profile(profile);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    b.add_shared_run(static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(hi - lo + 1),
                     off + (lo + half - i));
    b.end_row();
  }
  return b.finish(true);
}

}  // namespace

TEST_CASE("from_dense round trip and matvec against a dense product") {
  std::mt19937_64 rng(7);
  for (double fill : {0.0, 0.2, 0.6, 1.0}) {
    const Dense d = random_dense(rng, 13, 11, fill);
    const SegmentedMatrix m = SegmentedMatrix::from_dense(d.rows, d.cols, d.a, d.present);
    CHECK(m.rows() == 13);
    CHECK(m.cols() == 11);
    CHECK(m.dense_presence() == d.present);
    const std::vector<double> back = m.to_dense(-1.0);
    for (std::size_t k = 0; k < back.size(); ++k) CHECK(back[k] == (d.present[k] ? d.a[k] : -1.0));
    for (std::size_t i = 0; i < d.rows; ++i) {
      for (std::size_t j = 0; j < d.cols; ++j) {
        const double* p = m.find(i, j);
        CHECK((p != nullptr) == (d.present[i * d.cols + j] != 0));
        if (p) CHECK(*p == d.a[i * d.cols + j]);
      }
    }
    std::vector<double> x(d.cols);
    for (double& v : x) v = uniform(rng, 0.0, 3.0);
    std::vector<double> y(d.rows);
    m.apply(x, y);
    const std::vector<double> ref = dense_apply(d, x);
    for (std::size_t i = 0; i < d.rows; ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-14));
  }
}

TEST_CASE("transpose and map") {
  std::mt19937_64 rng(8);
  const Dense d = random_dense(rng, 9, 12, 0.4);
  const SegmentedMatrix m = SegmentedMatrix::from_dense(d.rows, d.cols, d.a, d.present);
  const SegmentedMatrix t = m.transposed();
  CHECK(t.rows() == 12);
  CHECK(t.nnz() == m.nnz());
  for (std::size_t i = 0; i < d.rows; ++i) {
    for (std::size_t j = 0; j < d.cols; ++j) {
      const double* a = m.find(i, j);
      const double* b = t.find(j, i);
      CHECK((a == nullptr) == (b == nullptr));
      if (a && b) CHECK(*a == *b);
    }
  }
  const SegmentedMatrix sq = m.map([](double v) { return v * v; });
  CHECK(&sq.pattern() == &m.pattern());
  for (std::size_t i = 0; i < d.rows; ++i) {
    m.for_each_in_row(i, [&](std::size_t j, double v) { CHECK(*sq.find(i, j) == v * v); });
  }
}

TEST_CASE("log matvec is the matvec of exp in log space") {
  std::mt19937_64 rng(9);
  const Dense d = random_dense(rng, 10, 10, 0.5);
  const SegmentedMatrix m = SegmentedMatrix::from_dense(d.rows, d.cols, d.a, d.present);
  const SegmentedMatrix lg = m.map([](double v) { return std::log(v); });
  std::vector<double> x(10), lx(10), y(10), ly(10);
  for (std::size_t j = 0; j < 10; ++j) {
    x[j] = j == 3 ? 0.0 : uniform(rng, 0.1, 2.0);
    lx[j] = std::log(x[j]);
  }
  m.apply(x, y);
  lg.apply_log(lx, ly);
  for (std::size_t i = 0; i < 10; ++i) {
    if (y[i] == 0.0) {
      CHECK(ly[i] == -std::numeric_limits<double>::infinity());
    } else {
      CHECK(std::exp(ly[i]) == doctest::Approx(y[i]).epsilon(1e-13));
    }
  }
}

TEST_CASE("builder rejects out-of-order runs") {
  RunPatternBuilder b(2, 5);
  const double v[2] = {1.0, 2.0};
  b.add_run(2, v);
  CHECK_THROWS_AS(b.add_run(1, v), InvalidArgument);
}

TEST_CASE("shared profiles keep the pool small") {
  std::mt19937_64 rng(10);
  const SegmentedMatrix m = banded(500, 6, rng);
  CHECK(m.pattern().pool_size() == 13);
  CHECK(m.nnz() == 500 * 13 - 2 * (6 * 7 / 2));
  CHECK(m.pattern().bandwidth() == 6);
  CHECK(m.symmetric());
}

TEST_CASE("every available kernel table matches the scalar reference") {
  const std::vector<const simd::KernelTable*> tables = simd::available();
  REQUIRE(!tables.empty());
  CHECK(tables.front()->isa == simd::Isa::scalar);
  const simd::KernelTable& ref = simd::scalar_table();
  std::mt19937_64 rng(11);

  for (const simd::KernelTable* t : tables) {
    CAPTURE(t->name);
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 16u, 17u, 33u, 1001u}) {
      std::vector<double> a(n), b(n);
      for (std::size_t k = 0; k < n; ++k) {
        a[k] = uniform(rng, -1.0, 1.0);
        b[k] = uniform(rng, 0.0, 1.0);
      }
      const double r0 = ref.dot(a.data(), b.data(), n);
      const double r1 = t->dot(a.data(), b.data(), n);
      double scale = 0.0;
      for (std::size_t k = 0; k < n; ++k) scale += std::abs(a[k] * b[k]);
      CHECK(std::abs(r0 - r1) <= 1e-15 * (scale + 1e-300) * 4);
    }

    for (std::size_t half : {0u, 1u, 2u, 3u, 4u, 5u, 8u, 13u}) {
      const SegmentedMatrix m = banded(97, half, rng);
      const SegmentedMatrix lg = m.map([](double v) { return std::log(v); });
      std::vector<double> x(97), lx(97);
      for (std::size_t j = 0; j < 97; ++j) {
        x[j] = j % 11 == 0 ? 0.0 : uniform(rng, 0.0, 5.0);
        lx[j] = j % 11 == 0 ? -std::numeric_limits<double>::infinity() : std::log(x[j]);
      }
      std::vector<double> y0(97), y1(97), l0(97), l1(97);
      ref.matvec(m.pattern(), m.pool().data(), x.data(), y0.data(), 0, 97);
      t->matvec(m.pattern(), m.pool().data(), x.data(), y1.data(), 0, 97);
      ref.log_matvec(lg.pattern(), lg.pool().data(), lx.data(), l0.data(), 0, 97);
      t->log_matvec(lg.pattern(), lg.pool().data(), lx.data(), l1.data(), 0, 97);
      for (std::size_t i = 0; i < 97; ++i) {
        CHECK(y1[i] == doctest::Approx(y0[i]).epsilon(1e-14));
        if (std::isinf(l0[i])) {
          CHECK(l1[i] == l0[i]);
        } else {
          CHECK(l1[i] == doctest::Approx(l0[i]).epsilon(1e-14));
        }
      }
      // Partial row ranges touch only their rows.
      std::vector<double> part(97, -7.0);
      t->matvec(m.pattern(), m.pool().data(), x.data(), part.data(), 10, 20);
      for (std::size_t i = 0; i < 97; ++i) {
        if (i >= 10 && i < 20) {
          CHECK(part[i] == doctest::Approx(y0[i]).epsilon(1e-14));
        } else {
          CHECK(part[i] == -7.0);
        }
      }
    }
  }
}

TEST_CASE("active table can be switched and matrix products follow it") {
  std::mt19937_64 rng(12);
  const SegmentedMatrix m = banded(301, 9, rng);
  std::vector<double> x(301);
  for (double& v : x) v = uniform(rng, 0.0, 1.0);
  std::vector<double> ref(301);
  REQUIRE(simd::set_active(simd::Isa::scalar));
  m.apply(x, ref);
  for (const simd::KernelTable* t : simd::available()) {
    REQUIRE(simd::set_active(t->isa));
    CHECK(simd::active().isa == t->isa);
    std::vector<double> y(301);
    m.apply(x, y);
    for (std::size_t i = 0; i < 301; ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-14));
  }
  CHECK(simd::parse_isa("avx2") == simd::Isa::avx2);
  CHECK(simd::parse_isa("scalar") == simd::Isa::scalar);
  CHECK_FALSE(simd::parse_isa("sse9").has_value());
}
