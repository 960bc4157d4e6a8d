#pragma once

namespace oran::parallel {

// Thread budget for the OpenMP kernels. Every kernel in this project is
// bit-deterministic for any thread count: work is partitioned on fixed
// indices and floating-point reductions run over fixed-size blocks in
// index order, so serial and parallel execution produce identical bits.
void set_max_threads(int n);
int max_threads();
bool enabled();

}  // namespace oran::parallel
