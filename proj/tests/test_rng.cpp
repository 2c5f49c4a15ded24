#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "ddea/rng.hpp"

using ddea::Rng;
using ddea::Stream;
using ddea::derive_seed;

TEST_CASE("generator output is platform-independent", "[rng]") {
  // Frozen values: any change here breaks reproducibility of every seeded
  // result in the project.
  Rng r(0);
  CHECK(r() == 0xe220a8397b1dcdafULL);
  CHECK(r() == 0x6e789e6aa1b965f4ULL);
  CHECK(r() == 0x06c45d188009454fULL);

  Rng u(0);
  CHECK(u.unit() == Catch::Approx(0.88331080821364261).epsilon(0).margin(0));

  CHECK(derive_seed(7, Stream::kInit, 3) == 0xc87fe1e169648a3dULL);
}

TEST_CASE("same seed replays the same sequence", "[rng]") {
  Rng a(123456789), b(123456789);
  for (int i = 0; i < 100; ++i) REQUIRE(a() == b());
}

TEST_CASE("derived seeds separate streams and counters", "[rng]") {
  std::set<std::uint64_t> seen;
  for (const auto s : {Stream::kGraphGen, Stream::kInit, Stream::kSelection, Stream::kOperator,
                       Stream::kMutationGate, Stream::kMutation, Stream::kTieBreak,
                       Stream::kPadding, Stream::kNoise, Stream::kTraining, Stream::kBench})
    for (std::uint64_t c = 0; c < 16; ++c) seen.insert(derive_seed(42, s, c));
  CHECK(seen.size() == 11 * 16);  // no collisions across (stream, counter)

  CHECK(derive_seed(1, Stream::kInit) == derive_seed(1, Stream::kInit, 0));
  CHECK(derive_seed(1, Stream::kInit) != derive_seed(2, Stream::kInit));
}

TEST_CASE("unit draws lie in [0,1) with the right mean", "[rng]") {
  Rng r(99);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  const double mean = sum / n;
  const double sigma = 1.0 / std::sqrt(12.0 * n);
  CHECK(std::abs(mean - 0.5) < 5.0 * sigma);
}

TEST_CASE("bounded draws are unbiased", "[rng]") {
  Rng r(7);
  const int n = 100000, buckets = 10;
  std::vector<int> count(buckets, 0);
  for (int i = 0; i < n; ++i) {
    const std::uint64_t v = r.below(buckets);
    REQUIRE(v < static_cast<std::uint64_t>(buckets));
    ++count[v];
  }
  const double expected = static_cast<double>(n) / buckets;
  const double sigma = std::sqrt(n * (1.0 / buckets) * (1.0 - 1.0 / buckets));
  for (int b = 0; b < buckets; ++b) CHECK(std::abs(count[b] - expected) < 5.0 * sigma);
}

TEST_CASE("coin respects its bias", "[rng]") {
  Rng r(5);
  const int n = 100000;
  int heads = 0;
  for (int i = 0; i < n; ++i)
    if (r.coin(0.3)) ++heads;
  const double sigma = std::sqrt(n * 0.3 * 0.7);
  CHECK(std::abs(heads - 0.3 * n) < 5.0 * sigma);
  Rng z(6);
  for (int i = 0; i < 1000; ++i) REQUIRE_FALSE(z.coin(0.0));
}
