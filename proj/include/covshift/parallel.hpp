#pragma once

#include <cstddef>

namespace covshift {

// Number of threads OpenMP will use for parallel regions (1 if built
// without OpenMP).
int max_threads();

// n <= 0 restores the hardware default.
void set_threads(int n);

// Fixed block length for deterministic reductions. Reductions accumulate
// one partial per block and combine partials in block order, so the result
// is identical for every thread count, including 1.
inline constexpr std::size_t kReductionBlock = 1024;

inline std::size_t num_blocks(std::size_t n) {
  return (n + kReductionBlock - 1) / kReductionBlock;
}

}  // namespace covshift
