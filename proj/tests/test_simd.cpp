#include <cstring>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "treelab/rng.hpp"
#include "treelab/simd/kernels.hpp"

using namespace treelab;

namespace {

std::vector<double> random_doubles(std::size_t n, std::uint64_t seed) {
  Generator g(seed_stream(seed, 0));
  std::vector<double> v(n);
  for (auto& x : v) x = (g.uniform() - 0.3) * 1e3 * g.uniform();
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("AVX2 kernels are bit-identical to the scalar reference") {
  if (!simd::isa_available(simd::Isa::avx2)) {
    MESSAGE("AVX2 not available on this host; equivalence test skipped");
    return;
  }
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 63u, 64u, 65u, 130u, 1001u}) {
    const auto x = random_doubles(n, 1 + n), y = random_doubles(n, 2 + n), d0 = random_doubles(n, 3 + n);
    Generator g(seed_stream(n, 5));
    std::vector<std::uint64_t> words(n);
    g.fill(words);
    for (double p : {0.0, 0.13, 0.5, 0.999, 1.0}) {
      const auto rule = BernoulliRule::for_probability(p);
      std::vector<std::uint64_t> a((n + 63) / 64, ~0ull), b((n + 63) / 64, ~0ull);
      {
        simd::IsaScope s(simd::Isa::scalar);
        simd::bernoulli_mask(words, rule.threshold, rule.all, a);
      }
      {
        simd::IsaScope s(simd::Isa::avx2);
        simd::bernoulli_mask(words, rule.threshold, rule.all, b);
      }
      CHECK(a == b);
    }
    auto run = [&](simd::Isa isa) {
      simd::IsaScope s(isa);
      std::vector<double> d1 = d0, d2(n);
      simd::axpy2(d1, 0.37, x, -1.25, y);
      simd::scale(d2, 0.1, x);
      return std::make_tuple(d1, d2, simd::lane_sum(x), simd::max_product(x, y));
    };
    const auto [s1, s2, s3, s4] = run(simd::Isa::scalar);
    const auto [a1, a2, a3, a4] = run(simd::Isa::avx2);
    CHECK(same_bits(s1, a1));
    CHECK(same_bits(s2, a2));
    CHECK(std::memcmp(&s3, &a3, sizeof s3) == 0);
    CHECK(std::memcmp(&s4, &a4, sizeof s4) == 0);
  }
}

TEST_CASE("scalar kernels compute the documented values") {
  simd::IsaScope s(simd::Isa::scalar);
  const std::vector<std::uint64_t> words = {0, 5, 10, 15};
  std::vector<std::uint64_t> bits(1);
  simd::bernoulli_mask(words, 10, false, bits);
  CHECK(bits[0] == 0b0011u);
  std::vector<double> d = {1, 1, 1};
  const std::vector<double> x = {1, 2, 3}, y = {4, 5, 6};
  simd::axpy2(d, 2.0, x, 0.5, y);
  CHECK(d == std::vector<double>{5, 7.5, 10});
  CHECK(simd::lane_sum(x) == 6.0);
  CHECK(simd::max_product(x, y) == 18.0);
  CHECK(simd::max_product({}, {}) == 0.0);
}
