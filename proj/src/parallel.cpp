#include "covshift/parallel.hpp"

#include <Eigen/Core>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace covshift {

namespace {
// Eigen products stay single-threaded; parallelism lives at the task level
// and in the blocked kernels, where the accumulation order is pinned. This
// keeps every result independent of the thread count.
struct EigenSerialInit {
  EigenSerialInit() { Eigen::setNbThreads(1); }
};
const EigenSerialInit eigen_serial_init;
}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n <= 0) {
    omp_set_num_threads(omp_get_num_procs());
  } else {
    omp_set_num_threads(n);
  }
#else
  (void)n;
#endif
}

}  // namespace covshift
