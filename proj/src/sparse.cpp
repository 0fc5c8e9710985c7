#include "rhe/sparse.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "rhe/errors.hpp"
#include "rhe/simd/kernels.hpp"

namespace rhe {

std::size_t RunPattern::row_nnz(std::size_t i) const noexcept {
  std::size_t n = 0;
  for (const Run& r : row(i)) n += r.len;
  return n;
}

RunPatternBuilder::RunPatternBuilder(std::size_t rows, std::size_t cols)
    : pattern_(std::make_unique<RunPattern>()) {
  pattern_->rows_ = rows;
  pattern_->cols_ = cols;
  pattern_->row_ptr_.reserve(rows + 1);
}

std::uint64_t RunPatternBuilder::add_profile(std::span<const double> values) {
  const std::uint64_t off = pool_.size();
  pool_.insert(pool_.end(), values.begin(), values.end());
  return off;
}

void RunPatternBuilder::add_shared_run(std::uint32_t col, std::uint32_t len, std::uint64_t offset) {
  if (len == 0) return;
  if (static_cast<std::int64_t>(col) <= last_col_ || col + len > pattern_->cols_ ||
      offset + len > pool_.size()) {
    throw InvalidArgument("RunPatternBuilder: run out of order or out of range");
  }
  const auto note_band = [this](std::uint32_t c, std::uint32_t n) {
    const std::size_t i = current_row_;
    const std::size_t first = c;
    const std::size_t last = std::size_t{c} + n - 1;
    const std::size_t far = std::max(i > first ? i - first : 0, last > i ? last - i : 0);
    pattern_->bandwidth_ = std::max(pattern_->bandwidth_, far);
  };
  // Merge with the previous run when both columns and pool slices are adjacent.
  auto& runs = pattern_->runs_;
  if (runs.size() > pattern_->row_ptr_.back()) {
    Run& prev = runs.back();
    if (prev.col + prev.len == col && prev.offset + prev.len == offset) {
      prev.len += len;
      pattern_->nnz_ += len;
      last_col_ = col + len - 1;
      note_band(col, len);
      return;
    }
  }
  runs.push_back(Run{col, len, offset});
  pattern_->nnz_ += len;
  last_col_ = col + len - 1;
  note_band(col, len);
}

void RunPatternBuilder::add_run(std::uint32_t col, std::span<const double> values) {
  if (values.empty()) return;
  const std::uint64_t off = add_profile(values);
  add_shared_run(col, static_cast<std::uint32_t>(values.size()), off);
}

void RunPatternBuilder::end_row() {
  if (current_row_ >= pattern_->rows_) throw InvalidArgument("RunPatternBuilder: too many rows");
  pattern_->row_ptr_.push_back(pattern_->runs_.size());
  ++current_row_;
  last_col_ = -1;
}

SegmentedMatrix RunPatternBuilder::finish(bool symmetric) {
  while (current_row_ < pattern_->rows_) end_row();
  pattern_->pool_size_ = pool_.size();
  pattern_->symmetric_ = symmetric && pattern_->rows_ == pattern_->cols_;
  SegmentedMatrix m(std::shared_ptr<const RunPattern>(std::move(pattern_)), std::move(pool_));
#ifndef NDEBUG
  if (m.symmetric()) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      m.for_each_in_row(i, [&](std::size_t j, double v) {
        const double* t = m.find(j, i);
        assert(t != nullptr && *t == v);
        (void)t;
        (void)v;
      });
    }
  }
#endif
  return m;
}

SegmentedMatrix::SegmentedMatrix(std::shared_ptr<const RunPattern> pattern, std::vector<double> pool)
    : pattern_(std::move(pattern)), pool_(std::move(pool)) {
  if (pool_.size() != pattern_->pool_size()) {
    throw InvalidArgument("SegmentedMatrix: pool size does not match pattern");
  }
}

SegmentedMatrix SegmentedMatrix::from_dense(std::size_t rows, std::size_t cols,
                                            std::span<const double> values,
                                            std::span<const std::uint8_t> present) {
  if (values.size() != rows * cols || present.size() != rows * cols) {
    throw InvalidArgument("from_dense: shape mismatch");
  }
  RunPatternBuilder b(rows, cols);
  std::vector<double> buf;
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t j = 0;
    while (j < cols) {
      if (!present[i * cols + j]) {
        ++j;
        continue;
      }
      const std::size_t start = j;
      buf.clear();
      while (j < cols && present[i * cols + j]) buf.push_back(values[i * cols + j++]);
      b.add_run(static_cast<std::uint32_t>(start), buf);
    }
    b.end_row();
  }
  bool sym = rows == cols;
  for (std::size_t i = 0; sym && i < rows; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (present[i * cols + j] != present[j * cols + i] ||
          (present[i * cols + j] && values[i * cols + j] != values[j * cols + i])) {
        sym = false;
        break;
      }
    }
  }
  return b.finish(sym);
}

void SegmentedMatrix::apply(std::span<const double> x, std::span<double> y) const {
  assert(x.size() >= cols() && y.size() >= rows());
  const simd::KernelTable& k = simd::active();
  const std::size_t n = rows();
  const double* pool = pool_.data();
#if defined(_OPENMP)
  constexpr std::size_t chunk = 256;
  const std::ptrdiff_t blocks = static_cast<std::ptrdiff_t>((n + chunk - 1) / chunk);
#pragma omp parallel for schedule(static) if (n > 4 * chunk)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * chunk;
    k.matvec(*pattern_, pool, x.data(), y.data(), lo, std::min(n, lo + chunk));
  }
#else
  k.matvec(*pattern_, pool, x.data(), y.data(), 0, n);
#endif
}

void SegmentedMatrix::apply_log(std::span<const double> log_x, std::span<double> log_y) const {
  assert(log_x.size() >= cols() && log_y.size() >= rows());
  const simd::KernelTable& k = simd::active();
  const std::size_t n = rows();
  const double* pool = pool_.data();
#if defined(_OPENMP)
  constexpr std::size_t chunk = 256;
  const std::ptrdiff_t blocks = static_cast<std::ptrdiff_t>((n + chunk - 1) / chunk);
#pragma omp parallel for schedule(static) if (n > 4 * chunk)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * chunk;
    k.log_matvec(*pattern_, pool, log_x.data(), log_y.data(), lo, std::min(n, lo + chunk));
  }
#else
  k.log_matvec(*pattern_, pool, log_x.data(), log_y.data(), 0, n);
#endif
}

SegmentedMatrix SegmentedMatrix::map(const std::function<double(double)>& f) const {
  std::vector<double> out(pool_.size());
  std::transform(pool_.begin(), pool_.end(), out.begin(), f);
  return SegmentedMatrix(pattern_, std::move(out));
}

SegmentedMatrix SegmentedMatrix::transposed() const {
  const std::size_t r = rows();
  const std::size_t c = cols();
  std::vector<std::size_t> count(c + 1, 0);
  for (const Run& run : pattern_->runs()) {
    for (std::uint32_t t = 0; t < run.len; ++t) ++count[run.col + t + 1];
  }
  for (std::size_t j = 0; j < c; ++j) count[j + 1] += count[j];
  std::vector<std::uint32_t> rows_of(count[c]);
  std::vector<double> vals(count[c]);
  std::vector<std::size_t> fill(count.begin(), count.end() - 1);
  for (std::size_t i = 0; i < r; ++i) {
    for_each_in_row(i, [&](std::size_t j, double v) {
      rows_of[fill[j]] = static_cast<std::uint32_t>(i);
      vals[fill[j]++] = v;
    });
  }
  RunPatternBuilder b(c, r);
  for (std::size_t j = 0; j < c; ++j) {
    std::size_t k = count[j];
    while (k < count[j + 1]) {
      const std::size_t start = k;
      while (k + 1 < count[j + 1] && rows_of[k + 1] == rows_of[k] + 1) ++k;
      ++k;
      b.add_run(rows_of[start], std::span<const double>(vals.data() + start, k - start));
    }
    b.end_row();
  }
  return b.finish(symmetric());
}

std::vector<double> SegmentedMatrix::to_dense(double fill) const {
  std::vector<double> out(rows() * cols(), fill);
  for (std::size_t i = 0; i < rows(); ++i) {
    for_each_in_row(i, [&](std::size_t j, double v) { out[i * cols() + j] = v; });
  }
  return out;
}

std::vector<std::uint8_t> SegmentedMatrix::dense_presence() const {
  std::vector<std::uint8_t> out(rows() * cols(), 0);
  for (std::size_t i = 0; i < rows(); ++i) {
    for_each_in_row(i, [&](std::size_t j, double) { out[i * cols() + j] = 1; });
  }
  return out;
}

const double* SegmentedMatrix::find(std::size_t i, std::size_t j) const noexcept {
  const auto runs = pattern_->row(i);
  auto it = std::upper_bound(runs.begin(), runs.end(), j,
                             [](std::size_t col, const Run& run) { return col < run.col; });
  if (it == runs.begin()) return nullptr;
  --it;
  if (j >= std::size_t{it->col} + it->len) return nullptr;
  return pool_.data() + it->offset + (j - it->col);
}

}  // namespace rhe
