#include <cmath>
#include <vector>

#include "doctest.h"
#include "pgg/util.hpp"

using namespace pgg;

TEST_SUITE("util") {

TEST_CASE("rng is deterministic under the seed and differs across seeds") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform(), y = b.uniform(), z = c.uniform();
    all_equal = all_equal && x == y;
    any_diff = any_diff || x != z;
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("derived streams differ and re-derive reproducibly") {
  Rng a = Rng::derive(7, 0);
  Rng b = Rng::derive(7, 1);
  const std::uint64_t a0 = a.next_u64();
  CHECK(a0 != b.next_u64());
  CHECK(Rng::derive(7, 0).next_u64() == a0);
}

TEST_CASE("uniform_int stays in range and covers all values") {
  Rng rng(1);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const int v = rng.uniform_int(7);
    REQUIRE(v >= 0);
    REQUIRE(v < 7);
    counts[static_cast<std::size_t>(v)]++;
  }
  for (int c : counts) CHECK(c > 700);  // each value near 1000
  CHECK_THROWS_AS(rng.uniform_int(0), std::invalid_argument);
}

TEST_CASE("normal draws have the requested moments") {
  Rng rng(5);
  std::vector<double> draws;
  for (int i = 0; i < 200000; ++i) draws.push_back(rng.normal(2.0, 3.0));
  CHECK(mean(draws) == doctest::Approx(2.0).epsilon(0.02));
  CHECK(sample_sd(draws) == doctest::Approx(3.0).epsilon(0.02));
}

TEST_CASE("mean and sample sd on a textbook set") {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(mean(v) == doctest::Approx(5.0));
  CHECK(sample_sd(v) == doctest::Approx(std::sqrt(32.0 / 7.0)));
}

TEST_CASE("pearson correlation, perfect and degenerate cases") {
  CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
  CHECK(pearson({1, 2, 3}, {6, 4, 2}) == doctest::Approx(-1.0));
  bool degenerate = false;
  CHECK(pearson({1, 1, 1}, {1, 2, 3}, &degenerate) == doctest::Approx(0.0));
  CHECK(degenerate);
}

TEST_CASE("percentile interpolates linearly") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(percentile(v, 0) == doctest::Approx(1.0));
  CHECK(percentile(v, 100) == doctest::Approx(4.0));
  CHECK(percentile(v, 50) == doctest::Approx(2.5));
  CHECK(percentile(v, 25) == doctest::Approx(1.75));
}

TEST_CASE("fnv1a matches the published 64-bit constants") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

}  // TEST_SUITE
