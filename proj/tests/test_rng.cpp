#include <set>

#include "doctest.h"
#include "treelab/rng.hpp"

using namespace treelab;

TEST_CASE("philox4x32-10 known-answer vectors") {
  {
    const auto r = philox4x32_10({0, 0, 0, 0}, {0, 0});
    CHECK(r == PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  }
  {
    const auto r = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    CHECK(r == PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  }
  {
    const auto r = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    CHECK(r == PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
  }
}

TEST_CASE("streams are reproducible") {
  Generator a(seed_stream(42, 7)), b(seed_stream(42, 7));
  for (int i = 0; i < 1000; ++i) CHECK(a() == b());
  const ReplicaStream s(42, 7, tags::percolation);
  for (std::uint64_t k = 0; k < 100; ++k) CHECK(s.keyed_word(k) == ReplicaStream(42, 7, tags::percolation).keyed_word(k));
}

TEST_CASE("distinct replicas differ in their first 128 bits") {
  std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    Generator g(seed_stream(20180911, i));
    const auto a = g(), b = g();
    CHECK(seen.insert({a, b}).second);
  }
  // Tags and masters separate streams too.
  CHECK(ReplicaStream(1, 0, tags::walk).keyed_word(5) != ReplicaStream(1, 0, tags::percolation).keyed_word(5));
  CHECK(ReplicaStream(1, 0, tags::walk).keyed_word(5) != ReplicaStream(2, 0, tags::walk).keyed_word(5));
}

TEST_CASE("generator statistics") {
  Generator g(seed_stream(3, 0));
  const int n = 200000;
  double s = 0.0;
  std::uint64_t below = 0;
  for (int i = 0; i < n; ++i) {
    const double u = g.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    s += u;
    below += g.below(6) == 5;
  }
  CHECK(s / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(static_cast<double>(below) / n == doctest::Approx(1.0 / 6.0).epsilon(0.03));
}

TEST_CASE("bernoulli rule thresholds") {
  const auto none = BernoulliRule::for_probability(0.0);
  const auto all = BernoulliRule::for_probability(1.0);
  CHECK_FALSE(none(0));
  CHECK(all(~std::uint64_t{0}));
  const auto half = BernoulliRule::for_probability(0.5);
  CHECK(half(0x7fffffffffffffffull));
  CHECK_FALSE(half(0x8000000000000000ull));
  // Monotone in p for any fixed word.
  const auto lo = BernoulliRule::for_probability(0.3), hi = BernoulliRule::for_probability(0.31);
  Generator g(seed_stream(9, 9));
  for (int i = 0; i < 10000; ++i) {
    const auto w = g();
    if (lo(w)) CHECK(hi(w));
  }
}
