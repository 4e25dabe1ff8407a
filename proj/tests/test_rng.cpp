#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "mtad/rng.hpp"
#include "mtad/stats.hpp"

using namespace mtad;

// Known-answer vectors for the 10-round Philox 4x32 block function, as
// published with the reference implementation of the algorithm.
TEST_CASE("philox known answers", "[rng]") {
  {
    const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);
  }
  {
    const auto out = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                {0xffffffffu, 0xffffffffu});
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);
  }
  {
    const auto out = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                {0xa4093822u, 0x299f31d0u});
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
  }
}

TEST_CASE("fnv1a64 known answers", "[rng]") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("streams are deterministic and independent", "[rng]") {
  RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool same_ab = true, same_ac = true, same_ad = true;
  std::vector<std::uint32_t> first_a;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u32();
    first_a.push_back(va);
    same_ab &= va == b.next_u32();
    same_ac &= va == c.next_u32();
    same_ad &= va == d.next_u32();
  }
  CHECK(same_ab);
  CHECK_FALSE(same_ac);
  CHECK_FALSE(same_ad);

  // Re-creating the stream replays it exactly.
  RngStream a2(42, 7);
  for (int i = 0; i < 64; ++i) CHECK(a2.next_u32() == first_a[std::size_t(i)]);
}

TEST_CASE("uniform stays in range with sane moments", "[rng]") {
  RngStream rng(1, 1);
  double sum = 0;
  double lo = 1, hi = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(sum / n == Catch::Approx(0.5).margin(0.01));
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("uniform_int covers its inclusive range uniformly", "[rng]") {
  RngStream rng(5, 2);
  std::vector<int> counts(10, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto v = rng.uniform_int(3, 12);
    REQUIRE(v >= 3);
    REQUIRE(v <= 12);
    ++counts[std::size_t(v - 3)];
  }
  for (int c : counts) CHECK(c > n / 10 - 300);
}

TEST_CASE("bernoulli matches its probability", "[rng]") {
  RngStream rng(9, 3);
  int hits = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) hits += rng.bernoulli(0.3) ? 1 : 0;
  CHECK(double(hits) / n == Catch::Approx(0.3).margin(0.015));
}

TEST_CASE("normal has standard moments", "[rng]") {
  RngStream rng(11, 4);
  std::vector<double> xs;
  for (int i = 0; i < 20000; ++i) xs.push_back(rng.normal());
  CHECK(mean_of(xs) == Catch::Approx(0.0).margin(0.03));
  CHECK(pop_std(xs) == Catch::Approx(1.0).margin(0.03));
  // Shift and scale pass through.
  RngStream rng2(11, 4);
  CHECK(rng2.normal(10.0, 2.0) == Catch::Approx(10.0 + 2.0 * xs[0]));
}

TEST_CASE("categorical follows the weights", "[rng]") {
  RngStream rng(13, 5);
  std::vector<double> w = {1.0, 3.0, 6.0};
  std::vector<int> counts(3, 0);
  const int n = 30000;
  for (int i = 0; i < n; ++i) ++counts[std::size_t(rng.categorical(w))];
  CHECK(double(counts[0]) / n == Catch::Approx(0.1).margin(0.01));
  CHECK(double(counts[1]) / n == Catch::Approx(0.3).margin(0.015));
  CHECK(double(counts[2]) / n == Catch::Approx(0.6).margin(0.015));
}

TEST_CASE("shuffle permutes deterministically", "[rng]") {
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[std::size_t(i)] = i;
  auto v1 = v, v2 = v;
  RngStream r1(21, 6), r2(21, 6);
  r1.shuffle(v1);
  r2.shuffle(v2);
  CHECK(v1 == v2);
  CHECK(v1 != v);  // astronomically unlikely to be identity
  auto sorted = v1;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == v);
}

TEST_CASE("mean and population std", "[stats]") {
  CHECK(mean_of(std::vector<double>{1, 2, 3, 4}) == Catch::Approx(2.5));
  CHECK(pop_std(std::vector<double>{1, 2, 3}) ==
        Catch::Approx(0.816496580927726).epsilon(1e-12));
  CHECK(pop_std(std::vector<double>{5, 5, 5}) == 0.0);
  CHECK_THROWS_AS(mean_of(std::vector<double>{}), ConfigError);
}

TEST_CASE("percentile interpolates between order statistics", "[stats]") {
  std::vector<double> xs;
  for (int i = 1; i <= 100; ++i) xs.push_back(double(i));
  CHECK(percentile(xs, 95.0) == Catch::Approx(95.05).epsilon(1e-12));
  CHECK(percentile(xs, 0.0) == 1.0);
  CHECK(percentile(xs, 100.0) == 100.0);
  CHECK(percentile({7.0, 7.0, 7.0}, 95.0) == 7.0);
  CHECK(percentile({3.0}, 50.0) == 3.0);
  // Input order must not matter.
  CHECK(percentile({9.0, 1.0, 5.0}, 50.0) == 5.0);
  CHECK_THROWS_AS(percentile({}, 50.0), ConfigError);
  CHECK_THROWS_AS(percentile({1.0}, 101.0), ConfigError);
}
