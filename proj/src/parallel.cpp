#include "oran/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace oran::parallel {

namespace {
int g_max_threads = 0;  // 0 = use the OpenMP default
}

void set_max_threads(int n) { g_max_threads = n < 1 ? 1 : n; }

int max_threads() {
  if (g_max_threads > 0) return g_max_threads;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

bool enabled() { return max_threads() > 1; }

}  // namespace oran::parallel
