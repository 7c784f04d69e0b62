#include <cmath>

#include "doctest.h"
#include "treelab/errors.hpp"
#include "treelab/exact_oracle.hpp"

using namespace treelab;

namespace {

TinyGraph edge() { return make_tiny_graph("edge", 2, {{0, 1}}); }
TinyGraph path(std::size_t len) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i < len; ++i) e.push_back({static_cast<VertexId>(i), static_cast<VertexId>(i + 1)});
  return make_tiny_graph("path", len + 1, e);
}
TinyGraph cycle3() { return make_tiny_graph("c3", 3, {{0, 1}, {1, 2}, {0, 2}}); }

TinyGraph mini_ball() {
  const int k[] = {3, 3}, r[] = {1, 1};
  return tiny_from_ball(ProductBall(make_ball_spec(k, r)), "mini");
}

}  // namespace

TEST_CASE("bond enumeration examples") {
  CHECK(brute_tau(edge(), 0.3, 0, 1) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(brute_tau(path(3), 0.5, 0, 3) == doctest::Approx(0.125).epsilon(1e-14));
  for (auto [x, y] : {std::pair{0, 1}, {1, 2}, {0, 2}}) CHECK(brute_tau(cycle3(), 0.5, x, y) == doctest::Approx(0.625).epsilon(1e-14));
  CHECK(brute_chi(edge(), 0.5, 0) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(brute_tau(path(2), 0.7, 1, 1) == 1.0);
}

TEST_CASE("triangle functional") {
  // Every (y, z) in the two-vertex graph contributes 1 at p = 1.
  CHECK(brute_triangle(edge(), 1.0, 0) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(brute_chi(path(2), 0.0, 0) == doctest::Approx(1.0));
  CHECK(brute_triangle(path(2), 0.0, 0) == doctest::Approx(1.0));
  // Against the definition from the tau matrix.
  const auto g = cycle3();
  const double p = 0.37;
  double s = 0.0;
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t z = 0; z < 3; ++z) s += brute_tau(g, p, 0, y) * brute_tau(g, p, y, z) * brute_tau(g, p, z, 0);
  CHECK(brute_triangle(g, p, 0) == doctest::Approx(s).epsilon(1e-13));
}

TEST_CASE("tilted susceptibility") {
  const auto g = make_tiny_graph("edge", 2, {{0, 1}}, {-std::log(2.0), 0.0});
  for (double lambda : {0.0, 0.5, 1.0}) CHECK(brute_tilted_chi(g, 1.0, lambda, 0) == doctest::Approx(1 + std::pow(2.0, lambda)));
  CHECK(brute_tilted_chi(g, 0.4, 0.5, 1) == doctest::Approx(1 + 0.4 * std::pow(2.0, -0.5)));
}

TEST_CASE("connection table agrees with direct enumeration") {
  for (const auto& g : tiny_graph_catalog()) {
    if (g.edges.size() > 16) continue;
    const ConnectionTable t(g);
    for (double p : {0.0, 0.25, 0.6, 1.0}) {
      for (std::size_t x = 0; x < g.vertex_count; ++x)
        for (std::size_t y = 0; y < g.vertex_count; ++y) CHECK(t.tau(p, x, y) == doctest::Approx(brute_tau(g, p, x, y)).epsilon(1e-12));
      CHECK(table_chi(t, p, 0) == doctest::Approx(brute_chi(g, p, 0)).epsilon(1e-12));
      CHECK(table_triangle(t, p, 0) == doctest::Approx(brute_triangle(g, p, 0)).epsilon(1e-12));
      CHECK(table_tilted_chi(t, g, p, 0.5, 0) == doctest::Approx(brute_tilted_chi(g, p, 0.5, 0)).epsilon(1e-12));
    }
  }
}

TEST_CASE("enumeration limits") {
  std::vector<Edge> e;
  for (VertexId i = 0; i < 25; ++i) e.push_back({i, i + 1});
  const auto g = make_tiny_graph("long", 26, e);
  CHECK_THROWS_AS(brute_tau(g, 0.5, 0, 1), Error);
  try {
    ConnectionTable t(g);
    FAIL("expected TooLarge");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::TooLarge);
  }
}

TEST_CASE("tree closed forms") {
  CHECK(tree_tau_exact(3, 0.5, 3) == doctest::Approx(0.125));
  CHECK(tree_tau_exact(3, tree_pc(3), 4) == doctest::Approx(0.0625));
  CHECK(tree_pc(4) == doctest::Approx(1.0 / 3.0));
  CHECK(tree_ising_exact(3, 0.5, 2) == doctest::Approx(0.213553).epsilon(1e-6));
  CHECK(tree_betac(3) == doctest::Approx(0.549306).epsilon(1e-6));
  for (int k : {3, 4, 5}) CHECK(tree_ising_exact(k, 0.0, 3) == 0.0);
  // Finite-ball susceptibility converges to the infinite sum below beta_c.
  CHECK(tree_ising_susceptibility(3, 0.4, 200) == doctest::Approx(tree_ising_susceptibility(3, 0.4)).epsilon(1e-10));
  CHECK(std::isinf(tree_ising_susceptibility(3, tree_betac(3) + 0.01)));
  // The ball t3_r2 is a tree: enumeration equals the closed form.
  const auto cat = tiny_graph_catalog();
  for (const auto& g : cat)
    if (g.name == "t3_r2") {
      const auto b = ProductBall(make_ball_spec(std::vector<int>{3}, std::vector<int>{2}));
      for (VertexId y = 0; y < b.vertex_count(); ++y) {
        const int d = b.depth(y, 0);
        CHECK(brute_tau(g, 0.45, 0, y) == doctest::Approx(tree_tau_exact(3, 0.45, d)).epsilon(1e-13));
        CHECK(brute_ising_two_point(g, 0.3, 0, y) == doctest::Approx(tree_ising_exact(3, 0.3, d)).epsilon(1e-12));
      }
    }
}

TEST_CASE("ising enumeration examples") {
  CHECK(brute_ising_two_point(edge(), 0.5, 0, 1) == doctest::Approx(std::tanh(0.5)).epsilon(1e-14));
  CHECK(brute_ising_two_point(path(2), 0.5, 0, 2) == doctest::Approx(0.213553).epsilon(1e-6));
  CHECK(brute_fk_connect(edge(), 1 - std::exp(-1.0), 2.0, 0, 1) == doctest::Approx(std::tanh(0.5)).epsilon(1e-14));
  for (double h : {0.1, 0.5, 1.3}) CHECK(brute_ising_magnetization(cycle3(), 0.0, h, 0) == doctest::Approx(std::tanh(h)).epsilon(1e-13));
  CHECK(brute_ising_susceptibility(cycle3(), 0.0, 0) == doctest::Approx(1.0));
  CHECK(brute_ising_bubble(cycle3(), 0.0, 0) == doctest::Approx(1.0));
  // Bubble and susceptibility from the correlation matrix.
  const auto g = path(3);
  const auto c = brute_ising_correlations(g, 0.4).correlation;
  double chi = 0, bub = 0;
  for (std::size_t y = 0; y < 4; ++y) {
    chi += c[y];
    bub += c[y] * c[y];
  }
  CHECK(brute_ising_susceptibility(g, 0.4, 0) == doctest::Approx(chi).epsilon(1e-13));
  CHECK(brute_ising_bubble(g, 0.4, 0) == doctest::Approx(bub).epsilon(1e-13));
}

TEST_CASE("Edwards-Sokal identity on every tiny graph") {
  for (const auto& g : tiny_graph_catalog()) {
    if (g.vertex_count > kMaxEnumeratedSpins) continue;
    const ConnectionTable t(g);
    for (double beta : {0.1, 0.35, 0.8}) {
      const double p = 1 - std::exp(-2 * beta);
      const auto c = brute_ising_correlations(g, beta).correlation;
      for (std::size_t y = 0; y < g.vertex_count; ++y) CHECK(std::abs(t.fk_connect(p, 2.0, 0, y) - c[y]) < 1e-12);
      if (g.edges.size() <= 16) CHECK(std::abs(brute_fk_connect(g, p, 2.0, 0, g.vertex_count - 1) - c[g.vertex_count - 1]) < 1e-12);
    }
  }
}

TEST_CASE("monotonicity and symmetry of tau") {
  for (const auto& g : tiny_graph_catalog()) {
    if (g.edges.size() > 16) continue;
    for (std::size_t x = 0; x < g.vertex_count; ++x)
      for (std::size_t y = 0; y < g.vertex_count; ++y) {
        double prev = -1.0;
        for (int i = 0; i <= 10; ++i) {
          const double t = brute_tau(g, i / 10.0, x, y);
          CHECK(t >= prev - 1e-15);
          prev = t;
        }
        CHECK(brute_tau(g, 0.3, x, y) == brute_tau(g, 0.3, y, x));
      }
  }
}

TEST_CASE("Harris-FKG on the mini ball and on trees") {
  const auto g = mini_ball();
  CHECK(g.vertex_count == 16);
  const ConnectionTable t(g);
  for (double p : {0.2, 0.5, 0.8}) {
    const auto m = t.tau_matrix(p);
    const std::size_t n = g.vertex_count;
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t z = 0; z < n; ++z) CHECK(m[x * n + z] >= m[x * n + y] * m[y * n + z] - 1e-12);
  }
  // Equality along a tree geodesic.
  const auto pth = path(4);
  CHECK(brute_tau(pth, 0.6, 0, 4) == doctest::Approx(brute_tau(pth, 0.6, 0, 2) * brute_tau(pth, 0.6, 2, 4)).epsilon(1e-14));
}
