#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "frag/rng.hpp"

using frag::derive_stream;
using frag::mix64;
using frag::RngStream;

TEST_SUITE("rng") {
  TEST_CASE("derivation is deterministic and tag-sensitive") {
    CHECK(derive_stream(42, frag::kTagLine) == derive_stream(42, frag::kTagLine));
    CHECK(derive_stream(42, frag::kTagLine) != derive_stream(42, frag::kTagReplica));
    CHECK(derive_stream(42, frag::kTagLine) != derive_stream(43, frag::kTagLine));
    CHECK(derive_stream(42, 1) != derive_stream(42, 2));
  }

  TEST_CASE("uniform doubles stay in range") {
    RngStream rng(12345);
    for (int i = 0; i < 10000; ++i) {
      const double u = rng.next_double();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
    }
    RngStream rng2(54321);
    for (int i = 0; i < 10000; ++i) {
      const double u = rng2.next_double_pos();
      CHECK(u > 0.0);
      CHECK(u <= 1.0);
    }
  }

  TEST_CASE("uniform mean is near one half") {
    RngStream rng(2026);
    const int n = 100000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += rng.next_double();
    // se = 1/sqrt(12 n) ~ 9.1e-4; allow 4 se.
    CHECK(std::fabs(acc / n - 0.5) < 4.0 / std::sqrt(12.0 * n));
  }

  TEST_CASE("exponential has the requested mean") {
    RngStream rng(7);
    const int n = 200000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double e = rng.exponential(2.0);
      CHECK(e >= 0.0);
      acc += e;
    }
    // Mean 1/2, sd 1/2: allow 4 se.
    CHECK(std::fabs(acc / n - 0.5) < 4.0 * 0.5 / std::sqrt(static_cast<double>(n)));
  }

  TEST_CASE("one million derived replica seeds have no collision") {
    const std::uint64_t master = 20260816;
    std::vector<std::uint64_t> seeds;
    seeds.reserve(1000000);
    for (std::uint64_t r = 0; r < 1000000; ++r) seeds.push_back(frag::replica_seed(master, r));
    std::sort(seeds.begin(), seeds.end());
    CHECK(std::adjacent_find(seeds.begin(), seeds.end()) == seeds.end());
  }

  TEST_CASE("mix64 avalanche changes many bits") {
    // Flipping one input bit flips roughly half the output bits.
    int total = 0;
    for (int bit = 0; bit < 64; ++bit) {
      const std::uint64_t a = mix64(0x123456789abcdef0ull);
      const std::uint64_t b = mix64(0x123456789abcdef0ull ^ (1ull << bit));
      total += __builtin_popcountll(a ^ b);
    }
    CHECK(total > 64 * 20);
    CHECK(total < 64 * 44);
  }
}
