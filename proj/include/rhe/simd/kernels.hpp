#pragma once

// Inner loops of the scaling iteration. Each instruction set provides the
// same table; the scalar table is the reference the others are tested
// against. Selection happens once at startup from the CPU features and the
// RHE_SIMD environment variable (scalar, avx2, neon, auto).

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "rhe/sparse.hpp"

namespace rhe::simd {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
  Isa isa;
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y[i] = sum over row i of pool[run.offset + t] * x[run.col + t], rows [begin, end).
  void (*matvec)(const RunPattern& pattern, const double* pool, const double* x, double* y,
                 std::size_t begin, std::size_t end);
  /// log-space variant: y[i] = log sum exp(pool + x) over row i; -inf for empty rows.
  void (*log_matvec)(const RunPattern& pattern, const double* log_pool, const double* log_x,
                     double* log_y, std::size_t begin, std::size_t end);
};

const KernelTable& scalar_table();
#if defined(RHE_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(RHE_HAVE_NEON)
const KernelTable& neon_table();
#endif

/// Tables compiled in and supported by the running CPU, scalar first.
std::vector<const KernelTable*> available();

const KernelTable& active();
/// Returns false if the requested ISA is unavailable; the active table is unchanged then.
bool set_active(Isa isa);

std::optional<Isa> parse_isa(std::string_view name);

}  // namespace rhe::simd
