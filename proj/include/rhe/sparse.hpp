#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace rhe {

/// A maximal stretch of consecutive column indices in one row whose values
/// sit contiguously in the value pool starting at `offset`.
struct Run {
  std::uint32_t col = 0;
  std::uint32_t len = 0;
  std::uint64_t offset = 0;
};

/// Sparsity structure of a banded kernel stored as runs of contiguous
/// columns. Runs may alias the same pool slice: on a uniform grid without
/// obstacles every row shares one value profile per row offset, so the
/// pool stays tiny while the matvec streams contiguous slices of x.
class RunPattern {
 public:
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return nnz_; }
  std::size_t pool_size() const noexcept { return pool_size_; }
  bool symmetric() const noexcept { return symmetric_; }
  /// Largest |i - j| over stored entries.
  std::size_t bandwidth() const noexcept { return bandwidth_; }
  std::size_t row_nnz(std::size_t i) const noexcept;

  std::span<const Run> row(std::size_t i) const noexcept {
    return {runs_.data() + row_ptr_[i], runs_.data() + row_ptr_[i + 1]};
  }
  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const Run> runs() const noexcept { return runs_; }

 private:
  friend class RunPatternBuilder;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t nnz_ = 0;
  std::size_t pool_size_ = 0;
  std::size_t bandwidth_ = 0;
  bool symmetric_ = false;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<Run> runs_;
};

class SegmentedMatrix;

/// Row-by-row construction. Rows are appended in order; within a row runs
/// must be appended in increasing column order and must not overlap.
class RunPatternBuilder {
 public:
  RunPatternBuilder(std::size_t rows, std::size_t cols);

  /// Appends shared values to the pool and returns their offset.
  std::uint64_t add_profile(std::span<const double> values);
  /// Run that aliases an existing pool slice.
  void add_shared_run(std::uint32_t col, std::uint32_t len, std::uint64_t offset);
  /// Run with its own values.
  void add_run(std::uint32_t col, std::span<const double> values);
  void end_row();

  /// `symmetric` is a promise by the caller, checked only in debug builds.
  SegmentedMatrix finish(bool symmetric);

 private:
  std::unique_ptr<RunPattern> pattern_;
  std::vector<double> pool_;
  std::size_t current_row_ = 0;
  std::int64_t last_col_ = -1;
};

/// Sparse matrix over a RunPattern. Matrices derived by entrywise maps
/// share the pattern.
class SegmentedMatrix {
 public:
  SegmentedMatrix() = default;
  SegmentedMatrix(std::shared_ptr<const RunPattern> pattern, std::vector<double> pool);

  static SegmentedMatrix from_dense(std::size_t rows, std::size_t cols,
                                    std::span<const double> values,
                                    std::span<const std::uint8_t> present);

  const RunPattern& pattern() const noexcept { return *pattern_; }
  std::shared_ptr<const RunPattern> pattern_ptr() const noexcept { return pattern_; }
  std::span<const double> pool() const noexcept { return pool_; }
  std::size_t rows() const noexcept { return pattern_ ? pattern_->rows() : 0; }
  std::size_t cols() const noexcept { return pattern_ ? pattern_->cols() : 0; }
  std::size_t nnz() const noexcept { return pattern_ ? pattern_->nnz() : 0; }
  bool symmetric() const noexcept { return pattern_ && pattern_->symmetric(); }

  /// y = A x.
  void apply(std::span<const double> x, std::span<double> y) const;
  /// y_i = log sum_j exp(A_ij + x_j), i.e. the matvec of exp(A) in log space.
  void apply_log(std::span<const double> log_x, std::span<double> log_y) const;

  SegmentedMatrix map(const std::function<double(double)>& f) const;
  SegmentedMatrix transposed() const;

  /// Column-major agnostic dense copy; absent entries become `fill`.
  std::vector<double> to_dense(double fill = 0.0) const;
  std::vector<std::uint8_t> dense_presence() const;

  template <class F>
  void for_each_in_row(std::size_t i, F&& f) const {
    for (const Run& run : pattern_->row(i)) {
      for (std::uint32_t t = 0; t < run.len; ++t) f(std::size_t{run.col} + t, pool_[run.offset + t]);
    }
  }

  /// Value at (i, j) or nullptr if structurally absent.
  const double* find(std::size_t i, std::size_t j) const noexcept;

 private:
  std::shared_ptr<const RunPattern> pattern_;
  std::vector<double> pool_;
};

}  // namespace rhe
