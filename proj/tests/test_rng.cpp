#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oran/rng.hpp"

using namespace oran;

TEST_CASE("streams are reproducible and distinct") {
  Rng a = Rng::stream(42, {1, 2, 3});
  Rng b = Rng::stream(42, {1, 2, 3});
  Rng c = Rng::stream(42, {1, 2, 4});
  bool all_equal = true;
  bool any_equal_c = false;
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_equal_c = any_equal_c || va == c.next_u64();
  }
  CHECK(all_equal);
  CHECK_FALSE(any_equal_c);
}

TEST_CASE("uniform stays in [0,1) with mean 1/2") {
  Rng rng(7);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(sum / 100000.0 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("exponential has mean 1") {
  Rng rng(11);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) sum += rng.exponential();
  CHECK(sum / 100000.0 == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("normal has mean 0 and unit variance") {
  Rng rng(13);
  double sum = 0.0, sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("poisson matches its mean across the chunking threshold") {
  Rng rng(17);
  for (double rate : {0.3, 2.0, 8.0, 45.0}) {
    long total = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) total += rng.poisson(rate);
    CHECK(static_cast<double>(total) / n == doctest::Approx(rate).epsilon(0.05));
  }
  CHECK(rng.poisson(0.0) == 0);
}

TEST_CASE("uniform_int covers its range") {
  Rng rng(19);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const int v = rng.uniform_int(7);
    CHECK(v >= 0);
    CHECK(v < 7);
    counts[static_cast<std::size_t>(v)] += 1;
  }
  for (int c : counts) CHECK(c > 8000);
}

TEST_CASE("shuffle is a permutation and seed-stable") {
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  Rng rng(23);
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});

  std::vector<int> w{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  Rng rng2(23);
  rng2.shuffle(w);
  CHECK(v == w);
}
