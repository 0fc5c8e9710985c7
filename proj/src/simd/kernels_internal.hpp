#pragma once

#include <cstddef>

#include "rhe/sparse.hpp"

namespace rhe::simd::detail {

// Shared by every table: exp does not vectorize portably, and the log-space
// path is only used at small epsilon where robustness matters more than speed.
void log_matvec_scalar(const RunPattern& pattern, const double* log_pool, const double* log_x,
                       double* log_y, std::size_t begin, std::size_t end);

}  // namespace rhe::simd::detail
