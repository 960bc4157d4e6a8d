#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace oran {

// splitmix64 finalizer; also used to derive independent streams by hashing
// (seed, id...) chains, so any (seed, tti, ru, user, rb) tuple maps to its
// own reproducible draw regardless of evaluation order.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix64(seed)) {}

  // Derives a child stream from (seed, ids...). Counter-based: no shared
  // state between streams, safe to create one per tensor entry in parallel.
  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t s = mix64(seed);
    for (std::uint64_t id : ids) s = mix64(s ^ mix64(id));
    return Rng(s);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int uniform_int(int n) {
    return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                             static_cast<unsigned __int128>(n)) >> 64);
  }

  // standard normal, Box-Muller (cosine branch only, keeps the stream
  // a pure function of draw count)
  double normal() {
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // exponential with mean 1
  double exponential() { return -std::log1p(-uniform()); }

  // Knuth product method, chunked so the running product stays well above
  // the denormal range for any practical rate
  int poisson(double rate) {
    int k = 0;
    while (rate > 30.0) {
      k += poisson_knuth(30.0);
      rate -= 30.0;
    }
    return k + poisson_knuth(rate);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(static_cast<int>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  int poisson_knuth(double rate) {
    if (rate <= 0.0) return 0;
    const double limit = std::exp(-rate);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

  std::uint64_t state_;
};

}  // namespace oran
