#include <cmath>
#include <map>

#include "doctest.h"
#include "treelab/errors.hpp"
#include "treelab/exact_oracle.hpp"
#include "treelab/walk.hpp"

using namespace treelab;

namespace {

ProductBall ball_of(std::vector<int> deg, std::vector<int> rad) { return ProductBall(make_ball_spec(deg, rad)); }
ProductSpec trees_of(std::vector<int> deg) { return make_product_spec(deg); }
KernelSpec srw() { return {}; }
KernelSpec lazy(double a) { return {KernelKind::lazy, {}, a}; }

}  // namespace

TEST_CASE("kernel resolution") {
  const auto t = trees_of({3, 5});
  const auto k = resolve_kernel(srw(), t);
  CHECK(k.weights.size() == 2);
  CHECK(k.weights[0] == doctest::Approx(3.0 / 8.0));
  CHECK_THROWS_AS(resolve_kernel({KernelKind::weighted, {0.5, 0.6}, 0.0}, t), Error);
  CHECK_THROWS_AS(resolve_kernel({KernelKind::lazy, {}, 1.0}, t), Error);
  CHECK_THROWS_AS(resolve_kernel({KernelKind::srw, {}, 0.3}, t), Error);
  CHECK(resolve_kernel({KernelKind::weighted, {0.25, 0.75}, 0.0}, t).weights[1] == 0.75);
  CHECK(kernel_kind_from_string("lazy") == KernelKind::lazy);
  CHECK(spectral_radius_target(trees_of({3}), srw()) == doctest::Approx(2 * std::sqrt(2.0) / 3).epsilon(1e-14));
  CHECK(spectral_radius_target(trees_of({3, 3}), srw()) == doctest::Approx(0.942809).epsilon(1e-6));
  CHECK(spectral_radius_target(trees_of({3}), lazy(0.5)) == doctest::Approx(0.5 + 0.5 * 2 * std::sqrt(2.0) / 3));
}

TEST_CASE("exact distributions on the ball") {
  const auto b = ball_of({3, 3}, {2, 2});
  const auto d1 = exact_distribution(b, srw(), 1);
  CHECK(d1.support.size() == 6);
  for (double p : d1.prob) CHECK(p == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(d1.entropy() == doctest::Approx(std::log(6.0)).epsilon(1e-14));

  const auto t = ball_of({3}, {2});
  const auto d2 = exact_distribution(t, srw(), 2);
  CHECK(d2.at(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(d2.sup() == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(exact_distribution(t, lazy(0.5), 1).entropy() == doctest::Approx(1.242453).epsilon(1e-6));

  const auto big = ball_of({3}, {12});
  CHECK(std::abs(exact_distribution(big, srw(), 12).mass() - 1.0) < 1e-12);
  const auto prod = ball_of({3, 4}, {6, 6});
  const auto d6 = exact_distribution(prod, lazy(0.25), 6);
  CHECK(std::abs(d6.mass() - 1.0) < 1e-12);
  for (auto v : d6.support) {
    const auto dv = prod.depths(v);
    CHECK(dv[0] + dv[1] <= 6);
  }
  try {
    (void)exact_distribution(t, srw(), 3);
    FAIL("expected RadiusTooSmall");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RadiusTooSmall);
  }
}

TEST_CASE("distributions are constant on spheres") {
  const auto b = ball_of({3, 4}, {5, 5});
  const auto d = exact_distribution(b, srw(), 5);
  std::map<std::vector<int>, std::pair<double, double>> range;
  for (std::size_t i = 0; i < d.support.size(); ++i) {
    auto [it, fresh] = range.try_emplace(b.depths(d.support[i]), d.prob[i], d.prob[i]);
    it->second.first = std::min(it->second.first, d.prob[i]);
    it->second.second = std::max(it->second.second, d.prob[i]);
  }
  for (const auto& [cls, r] : range) CHECK(r.second - r.first <= 1e-15 * r.second + 1e-300);
}

TEST_CASE("lumped distance chain agrees with the ball convolution") {
  for (const auto& kernel : {srw(), lazy(0.3), KernelSpec{KernelKind::weighted, {0.3, 0.7}, 0.0}}) {
    const auto b = ball_of({3, 4}, {6, 6});
    DistanceLaw law(trees_of({3, 4}), kernel, 6);
    std::map<std::vector<int>, double> sphere_size;
    for (int n = 1; n <= 6; ++n) {
      law.step();
      const auto d = exact_distribution(b, kernel, n);
      for (std::size_t i = 0; i < d.support.size(); ++i) {
        const auto cls = b.depths(d.support[i]);
        auto [it, fresh] = sphere_size.try_emplace(cls, 0.0);
        if (fresh) it->second = static_cast<double>(b.sphere(cls).size());
        const double per_point = law.prob(cls) / it->second;
        CHECK(d.prob[i] == doctest::Approx(per_point).epsilon(1e-12));
      }
      CHECK(d.sup() == doctest::Approx(law.sup_point_probability()).epsilon(1e-12));
      CHECK(d.entropy() == doctest::Approx(law.entropy()).epsilon(1e-12));
      CHECK(d.at(0) == doctest::Approx(law.return_probability()).epsilon(1e-12));
    }
  }
  DistanceLaw law(trees_of({3}), srw(), 2);
  law.step();
  law.step();
  CHECK_THROWS_AS(law.step(), Error);
}

TEST_CASE("spectral radius sequences") {
  const auto t = trees_of({3, 3});
  const auto s = spectral_radius_bounds(t, srw(), 160);
  CHECK(s.target == doctest::Approx(0.942809).epsilon(1e-6));
  for (std::size_t i = 1; i < s.return_root.size(); ++i) CHECK(s.return_root[i] >= s.return_root[i - 1] - 1e-12);
  // sup P^n is supermultiplicative (its n-th root need not be monotone).
  for (std::size_t a = 1; a <= 40; ++a)
    for (std::size_t c = 1; c <= 40; ++c)
      CHECK(s.sup_value[a + c - 1] >= s.sup_value[a - 1] * s.sup_value[c - 1] * (1 - 1e-12));
  for (std::size_t i = 0; i < s.return_root.size(); ++i) {
    CHECK(s.return_root[i] <= s.target + 1e-12);
    CHECK(s.sup_root[i] <= s.target + 1e-12);
  }
  // p_{2n} ~ C rho^{2n} n^{-3}: removing the polynomial factor from successive
  // ratios approaches rho from above, with an error shrinking roughly like 1/n^2.
  DistanceLaw law(t, srw(), 402);
  std::vector<double> ret;
  for (int i = 0; i < 402; ++i) {
    law.step();
    ret.push_back(law.return_probability());
  }
  auto corrected = [&](int n) {
    return std::sqrt(ret[2 * n + 1] / ret[2 * n - 1] * std::pow((n + 1.0) / n, 3)) - s.target;
  };
  double last = 1.0;
  for (int n : {20, 40, 80, 200}) {
    CHECK(corrected(n) > 0.0);
    CHECK(corrected(n) < last);
    last = corrected(n);
  }
  CHECK(corrected(200) < 1e-3);
  // Single tree and ball overload.
  const auto tb = ball_of({3}, {10});
  const auto a = spectral_radius_bounds(tb, srw(), 10), lumped = spectral_radius_bounds(trees_of({3}), srw(), 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(a.sup_value[i] == doctest::Approx(lumped.sup_value[i]).epsilon(1e-12));
  CHECK_THROWS_AS(spectral_radius_bounds(tb, srw(), 11), Error);
}

TEST_CASE("entropy sequences") {
  const auto h = entropy_sequence(trees_of({3, 3}), srw(), 60);
  CHECK(h[0] == 0.0);
  CHECK(h[1] == doctest::Approx(std::log(6.0)).epsilon(1e-14));
  for (std::size_t a = 1; a < h.size(); ++a)
    for (std::size_t c = 1; a + c < h.size(); ++c) CHECK(h[a + c] <= h[a] + h[c] + 1e-9);
  const auto lz = entropy_sequence(trees_of({3}), lazy(0.5), 3);
  CHECK(lz[1] == doctest::Approx(1.242453).epsilon(1e-6));
  const auto hb = entropy_sequence(ball_of({3, 3}, {5, 5}), srw(), 5);
  for (std::size_t i = 0; i < hb.size(); ++i) CHECK(hb[i] == doctest::Approx(h[i]).epsilon(1e-12));
}

TEST_CASE("walk sampler follows the exact law") {
  const auto b = ball_of({3, 3}, {3, 3});
  const auto d = exact_distribution(b, srw(), 3);
  const WalkSampler ws(b, srw());
  Generator gen(seed_stream(4, 0));
  std::map<VertexId, int> count;
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++count[ws.sample(3, gen)];
  for (std::size_t i = 0; i < d.support.size(); ++i) {
    const double p = d.prob[i];
    CHECK(std::abs(count[d.support[i]] / double(n) - p) <= 4.5 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("annealed check") {
  const auto b = ball_of({3, 3}, {8, 8});
  const auto zero = schramm_annealed_check(b, srw(), 0.21, 0, 40, 1000);
  CHECK(zero.expectation.mean == 1.0);
  CHECK(zero.rho_reference == 1.0);
  CHECK(zero.strict_holds);
  for (int n : {2, 4, 6, 8}) {
    const auto r = schramm_annealed_check(b, srw(), 0.21, n, 200, 20000);
    CHECK(r.strict_holds);
    CHECK(r.rho_holds);
    CHECK(r.strict_reference <= r.rho_reference);
  }
  const auto tree = ball_of({3}, {8});
  for (int n : {1, 4, 8}) {
    const auto r = schramm_annealed_check(tree, srw(), 0.5, n, 100, 40000);
    CHECK(r.has_exact);
    CHECK(r.exact_agrees);
  }
}

TEST_CASE("quenched check") {
  const auto tree = ball_of({3}, {6});
  const auto one = schramm_quenched_check(tree, srw(), 0.5, 1, 100, 20000);
  CHECK(one.exact == doctest::Approx(-std::log(2.0)));
  CHECK(one.exact_agrees);
  const auto four = schramm_quenched_check(tree, srw(), 0.5, 4, 100, 20000);
  CHECK(four.exact_agrees);
  const auto b = ball_of({3, 3}, {6, 6});
  const auto r = schramm_quenched_check(b, srw(), 0.21, 6, 200, 20000);
  CHECK(r.log_bias <= r.bias_tolerance);
  CHECK(r.reference == doctest::Approx(-entropy_sequence(trees_of({3, 3}), srw(), 200)[200] / 200).epsilon(1e-12));
  CHECK(r.holds);
  try {
    (void)schramm_quenched_check(b, srw(), 0.21, 6, 200, 50, {}, 1e-6);
    FAIL("expected InsufficientPrecision");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientPrecision);
  }
}

TEST_CASE("connection along a walk path is supermultiplicative") {
  const auto b = ball_of({3, 3}, {6, 6});
  const int n = 3, m = 3;
  for (std::uint64_t path = 0; path < 4; ++path) {
    Generator gen(seed_stream(11, path));
    std::vector<VertexId> steps;
    VertexId x = b.origin();
    for (int i = 0; i < n + m; ++i) {
      const auto nb = b.neighbors(x);
      x = nb[gen.below(nb.size())];
      steps.push_back(x);
    }
    const VertexId mid = steps[n - 1], end = steps.back();
    const auto whole = estimate_tau(b, 0.21, b.origin(), end, 40000, {1, 1});
    const auto a = estimate_tau(b, 0.21, b.origin(), mid, 40000, {2, 1});
    const auto c = estimate_tau(b, 0.21, mid, end, 40000, {3, 1});
    const double prod = a.mean * c.mean;
    const double sd = std::sqrt(whole.std_error * whole.std_error + std::pow(a.std_error * c.mean, 2) +
                                std::pow(c.std_error * a.mean, 2));
    CHECK(whole.mean >= prod - 3 * sd);
  }
}
