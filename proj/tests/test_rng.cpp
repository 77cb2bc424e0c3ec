#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "fswc/rng.hpp"

using fswc::mix_seed;
using fswc::Rng;
using fswc::splitmix64;

// Reference outputs computed with an independent implementation of the
// published splitmix64 / xoshiro256++ algorithms. These pin the generator
// bit-for-bit so augmentation/training runs replay identically everywhere.

TEST_CASE("splitmix64 matches the reference stream") {
  {
    std::uint64_t s = 0;
    const std::uint64_t expected[] = {
        0xe220a8397b1dcdafULL, 0x6e789e6aa1b965f4ULL, 0x06c45d188009454fULL,
        0xf88bb8a8724c81ecULL, 0x1b39896a51a8749bULL};
    for (std::uint64_t e : expected) CHECK(splitmix64(s) == e);
  }
  {
    std::uint64_t s = 0x123456789ABCDEFULL;
    const std::uint64_t expected[] = {
        0x157a3807a48faa9dULL, 0xd573529b34a1d093ULL, 0x2f90b72e996dccbeULL,
        0xa2d419334c4667ecULL, 0x01404ce914938008ULL};
    for (std::uint64_t e : expected) CHECK(splitmix64(s) == e);
  }
}

TEST_CASE("xoshiro256++ matches the reference stream") {
  struct Case {
    std::uint64_t seed;
    std::vector<std::uint64_t> expected;
  };
  const Case cases[] = {
      {0,
       {0x53175d61490b23dfULL, 0x61da6f3dc380d507ULL, 0x5c0fdf91ec9a7bfcULL,
        0x02eebf8c3bbe5e1aULL, 0x7eca04ebaf4a5eeaULL, 0x0543c37757f08d9aULL}},
      {42,
       {0xd0764d4f4476689fULL, 0x519e4174576f3791ULL, 0xfbe07cfb0c24ed8cULL,
        0xb37d9f600cd835b8ULL, 0xcb231c3874846a73ULL, 0x968d9f004e50de7dULL}},
      {0xDEADBEEFULL,
       {0x0c520eb8fea98edeULL, 0x2b74a6338b80e0e2ULL, 0xbe238770c3795322ULL,
        0x5f235f98a244ea97ULL, 0xe004f0cc1514d858ULL, 0x436a209963ff9223ULL}},
  };
  for (const Case& c : cases) {
    Rng rng(c.seed);
    for (std::uint64_t e : c.expected) CHECK(rng.next_u64() == e);
  }
}

TEST_CASE("next_double matches the frozen (u64 >> 11) * 2^-53 mapping") {
  Rng rng(42);
  const double expected[] = {0.8143051451229099, 0.3188210400616611,
                             0.9838941681774888, 0.7011355981347556};
  for (double e : expected) CHECK(rng.next_double() == e);
}

TEST_CASE("next_double stays in [0,1) and uniform() respects its range") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double d = rng.next_double();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
  }
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.uniform(-2.5, 4.0);
    CHECK(v >= -2.5);
    CHECK(v < 4.0);
  }
}

TEST_CASE("next_below is always within bound and covers small ranges") {
  Rng rng(11);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 5000; ++i) {
    const std::uint64_t v = rng.next_below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  for (int i = 0; i < 100; ++i) CHECK(rng.next_below(1) == 0);
}

TEST_CASE("uniform_int is inclusive on both ends") {
  Rng rng(13);
  int lo_seen = 100, hi_seen = -100;
  for (int i = 0; i < 5000; ++i) {
    const int v = rng.uniform_int(-3, 3);
    CHECK(v >= -3);
    CHECK(v <= 3);
    lo_seen = std::min(lo_seen, v);
    hi_seen = std::max(hi_seen, v);
  }
  CHECK(lo_seen == -3);
  CHECK(hi_seen == 3);
}

TEST_CASE("normal() is deterministic with plausible moments") {
  Rng a(99);
  Rng b(99);
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());

  Rng rng(3);
  const int n = 20000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  const double variance = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(variance - 1.0) < 0.05);
}

TEST_CASE("mix_seed derives stable, well-spread substream seeds") {
  // mix_seed(0, 0) runs splitmix64 from state 0, so it must equal the first
  // reference output above.
  CHECK(mix_seed(0, 0) == 0xe220a8397b1dcdafULL);
  CHECK(mix_seed(0, 0) == mix_seed(0, 0));

  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(mix_seed(42, i));
  CHECK(seen.size() == 1000);
  CHECK(mix_seed(1, 5) != mix_seed(2, 5));
}

TEST_CASE("identical seeds replay identical streams across instances") {
  Rng a(123456789);
  Rng b(123456789);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c(1);
  Rng d(2);
  bool any_difference = false;
  for (int i = 0; i < 16; ++i) {
    if (c.next_u64() != d.next_u64()) any_difference = true;
  }
  CHECK(any_difference);
}
