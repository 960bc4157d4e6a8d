// Timing comparison of the parallel kernels against single-thread runs.
// Every kernel is bit-deterministic for any thread count; the checksum
// column proves the outputs match.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "oran/net.hpp"
#include "oran/nn.hpp"
#include "oran/oracle.hpp"
#include "oran/parallel.hpp"
#include "oran/ppo.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct BenchResult {
  double serial_s = 0.0;
  double parallel_s = 0.0;
  double serial_checksum = 0.0;
  double parallel_checksum = 0.0;
};

template <typename F>
BenchResult run(F&& kernel, int threads) {
  BenchResult r;
  oran::parallel::set_max_threads(1);
  double t0 = now_s();
  r.serial_checksum = kernel();
  r.serial_s = now_s() - t0;
  oran::parallel::set_max_threads(threads);
  t0 = now_s();
  r.parallel_checksum = kernel();
  r.parallel_s = now_s() - t0;
  return r;
}

void report(const char* name, const BenchResult& r) {
  std::printf("%-24s serial %8.3f s   parallel %8.3f s   speedup %5.2fx   %s\n", name,
              r.serial_s, r.parallel_s, r.serial_s / std::max(r.parallel_s, 1e-9),
              r.serial_checksum == r.parallel_checksum ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int threads = 4;
#ifdef _OPENMP
  threads = omp_get_max_threads() > 1 ? omp_get_max_threads() : 4;
#endif
  if (argc > 1) threads = std::atoi(argv[1]);
  std::printf("comparing 1 thread vs %d threads\n\n", threads);

  {
    oran::net::NetworkConfig cfg;
    cfg.num_dus = 4;
    cfg.rus_per_du = 2;
    cfg.embb_users_per_ru = 4;
    cfg.urllc_users_per_ru = 4;
    cfg.num_rbs = 100;
    const oran::net::NetworkState state = oran::net::build_network(cfg);
    auto kernel = [&state]() {
      double checksum = 0.0;
      for (int tti = 0; tti < 50; ++tti) {
        const oran::net::ChannelRealization r = oran::net::sample_channels(state, tti);
        checksum += r.embb_gain.data[0] + r.urllc_gain.data.back();
      }
      return checksum;
    };
    report("channel_sampling", run(kernel, threads));
  }

  {
    oran::Rng rng(7);
    const std::vector<int> dims{16, 256, 256};
    const std::vector<oran::nn::HeadSpec> heads{{64, oran::nn::HeadKind::categorical},
                                                {64, oran::nn::HeadKind::categorical}};
    const oran::nn::Mlp net = oran::nn::init(dims, heads, rng);
    const int batch = 1024;
    std::vector<std::vector<double>> inputs(batch, std::vector<double>(16));
    for (auto& x : inputs)
      for (double& v : x) v = rng.uniform(-1.0, 1.0);
    std::vector<std::vector<std::vector<double>>> upstream(
        batch, std::vector<std::vector<double>>{std::vector<double>(64, 0.01),
                                                std::vector<double>(64, -0.01)});
    auto kernel = [&]() {
      std::vector<oran::nn::Workspace> ws;
      oran::nn::forward_batch(net, inputs, ws);
      oran::nn::Grad grad;
      oran::nn::backward_batch(net, ws, upstream, grad);
      return grad.squared_norm();
    };
    report("mlp_batch_backward", run(kernel, threads));
  }

  {
    const oran::oracle::TinyInstance instance = oran::oracle::default_tiny_instance();
    auto kernel = [&instance]() {
      const oran::oracle::BruteForceResult best = oran::oracle::brute_force_best(instance);
      return best.best_ee + static_cast<double>(best.best_index);
    };
    report("oracle_action_scan", run(kernel, threads));
  }

  return 0;
}
