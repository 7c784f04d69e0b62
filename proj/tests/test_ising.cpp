#include <cmath>

#include "doctest.h"
#include "treelab/errors.hpp"
#include "treelab/exact_oracle.hpp"
#include "treelab/ising.hpp"

using namespace treelab;

namespace {

ProductBall ball_of(std::vector<int> deg, std::vector<int> rad) { return ProductBall(make_ball_spec(deg, rad)); }

IsingParams quick(double beta, double h = 0.0, std::size_t samples = 2500) {
  IsingParams p;
  p.beta = beta;
  p.h = h;
  p.samples = samples;
  p.burn_in = 100;
  p.thinning = 1;
  p.chains = 4;
  p.batches = 40;
  return p;
}

TinyGraph cycle4() { return make_tiny_graph("c4", 4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}); }

}  // namespace

TEST_CASE("sweeps at zero coupling and zero field") {
  const auto b = ball_of({3, 3}, {2, 2});
  Generator gen(seed_stream(1, 0));
  auto s = make_fk_state(b, gen);
  for (int i = 0; i < 5; ++i) {
    sw_sweep(s, b, 0.0, 0.0, gen);
    for (EdgeId e = 0; e < b.edge_count(); ++e) CHECK_FALSE(s.bond_open(e));
  }
  for (int i = 0; i < 20; ++i) {
    sw_sweep(s, b, 0.4, 0.0, gen);
    for (VertexId v = 0; v < b.vertex_count(); ++v) CHECK_FALSE(s.has_ghost_bond(v));
  }
  // Open bonds only join agreeing spins, and clusters match the forest.
  for (int i = 0; i < 5; ++i) {
    sw_sweep(s, b, 0.4, 0.3, gen);
    for (EdgeId e = 0; e < b.edge_count(); ++e) {
      const auto& ed = b.graph().edges()[e];
      if (s.bond_open(e)) {
        CHECK(s.spin[ed.u] == s.spin[ed.v]);
        CHECK(s.connected(ed.u, ed.v));
      }
    }
    for (VertexId v = 0; v < b.vertex_count(); ++v)
      if (s.connected(v, s.ghost)) CHECK(s.spin[v] == 1);
  }
}

TEST_CASE("single edge bond frequency matches the FK weights") {
  const Graph g(2, {{0, 1}});
  const double beta = 0.5, p = 1 - std::exp(-2 * beta);
  const double exact = p / (p + 2 * (1 - p));
  Generator gen(seed_stream(2, 0));
  auto s = make_fk_state(g, gen);
  std::vector<double> open;
  for (int i = 0; i < 100000; ++i) {
    sw_sweep(s, g, beta, 0.0, gen);
    open.push_back(s.bond_open(0) ? 1.0 : 0.0);
  }
  const auto e = batch_means_estimate(open, 50);
  CHECK(std::abs(e.mean - exact) < 4 * e.std_error);
  CHECK(exact == doctest::Approx(std::tanh(0.5)));
}

TEST_CASE("two-point function") {
  const auto tree = ball_of({3}, {5});
  const auto y = tree.sphere(std::vector<int>{2}).front();
  CHECK(estimate_two_point(tree, 0, y, quick(0.5)).contains(0.213553, 3));
  CHECK(estimate_two_point(tree, 0, y, quick(0.0, 0.0, 200)).mean == 0.0);
  const auto g = cycle4();
  const auto c = brute_ising_correlations(g, 0.4).correlation;
  const auto many = estimate_two_point_many(g.graph(), 0, std::vector<VertexId>{0, 1, 2, 3}, quick(0.4, 0.0, 10000));
  for (std::size_t v = 0; v < 4; ++v) CHECK(many[v].contains(c[v], 3));
  CHECK(many[0].mean == 1.0);
}

TEST_CASE("FK connectivity agrees with colored spins") {
  const auto b = ball_of({3, 3}, {1, 1});
  const VertexId y = 15;
  const auto p = quick(0.3, 0.0, 10000);
  const auto fk = estimate_two_point(b, 0, y, p);
  const auto chains = run_fk_chains(b, p, {77, 1}, [&](FKState& s) { return double(s.spin[0] * s.spin[y]); });
  const auto spins = pooled_batch_means(chains, p.batches / p.chains);
  CHECK(std::abs(fk.mean - spins.mean) <= 3 * std::hypot(fk.std_error, spins.std_error));
}

TEST_CASE("susceptibility and bubble") {
  const auto g = cycle4();
  const auto c = brute_ising_correlations(g, 0.4).correlation;
  CHECK(estimate_susceptibility(g.graph(), 0, quick(0.4, 0.0, 10000)).contains(brute_ising_susceptibility(g, 0.4, 0), 3));
  CHECK(estimate_bubble(g.graph(), 0, quick(0.4, 0.0, 25000)).contains(brute_ising_bubble(g, 0.4, 0), 3));
  double bub = 0;
  for (std::size_t y = 0; y < g.vertex_count; ++y) bub += c[y] * c[y];
  CHECK(brute_ising_bubble(g, 0.4, 0) == doctest::Approx(bub));
  const auto b = ball_of({3, 3}, {2, 2});
  CHECK(estimate_bubble(b, 0, quick(0.0, 0.0, 200)).mean == 1.0);
}

TEST_CASE("magnetization") {
  const auto b = ball_of({3, 3}, {2, 2});
  for (double h : {0.2, 0.7}) CHECK(estimate_magnetization(b, 0, quick(0.0, h, 10000)).contains(std::tanh(h), 3));
  CHECK(estimate_magnetization(b, 0, quick(0.1, 20.0, 500)).mean == doctest::Approx(1.0).epsilon(1e-6));
  const auto g = cycle4();
  CHECK(estimate_magnetization(g.graph(), 0, quick(0.3, 0.2, 10000)).contains(brute_ising_magnetization(g, 0.3, 0.2, 0), 3));
  try {
    (void)estimate_magnetization(b, 0, quick(0.3, 0.0));
    FAIL("expected FieldRequired");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FieldRequired);
  }
}

TEST_CASE("Griffiths monotonicity in beta") {
  const auto b = ball_of({3, 3}, {3, 3});
  const auto y = b.sphere(std::vector<int>{1, 1}).front();
  EstimateWithCI prev{};
  for (double beta : {0.05, 0.1, 0.15, 0.2, 0.25, 0.3}) {
    const auto e = estimate_two_point(b, 0, y, quick(beta, 0.0, 1000));
    CHECK(e.mean >= prev.mean - 3 * std::hypot(e.std_error, prev.std_error));
    prev = e;
  }
}

TEST_CASE("pointwise bound near the product critical point") {
  const auto b = ball_of({3, 3}, {6, 6});
  std::vector<VertexId> targets;
  std::vector<double> bounds;
  for (int d1 = 0; d1 <= 4; ++d1)
    for (int d2 = 0; d2 <= 4 && d1 + d2 <= 6; ++d2) {
      targets.push_back(b.sphere(std::vector<int>{d1, d2}).front());
      bounds.push_back(std::pow(2.0, -(d1 + d2)));
    }
  const auto est = estimate_two_point_many(b, 0, targets, quick(0.2076, 0.0, 400));
  for (std::size_t i = 0; i < targets.size(); ++i) CHECK(est[i].below_bound(bounds[i], 3));
}

TEST_CASE("critical beta on a single tree") {
  const int deg[] = {3};
  BetacProtocol proto;
  proto.radii = {6};
  proto.samples = 1000;
  proto.max_samples = 8000;
  proto.tolerance = 0.005;
  auto chain = quick(0.0);
  chain.burn_in = 50;
  const auto r = estimate_betac(make_product_spec(deg), proto, chain);
  CHECK(std::abs(r.estimate.mean - tree_betac(3)) <= 0.01);
}

TEST_CASE("tree susceptibility exponent") {
  const std::vector<double> offsets = {0.005, 0.01, 0.02, 0.04};
  const auto f = tree_susceptibility_exponent(3, offsets);
  CHECK(std::abs(f.fit.slope + 1.0) <= 0.05);
}

TEST_CASE("chains are reproducible across thread counts") {
  const auto b = ball_of({3, 3}, {2, 2});
  const auto p = quick(0.25, 0.1, 400);
  const auto a = estimate_magnetization(b, 0, p, {5, 1});
  for (unsigned t : {4u, 8u}) {
    const auto c = estimate_magnetization(b, 0, p, {5, t});
    CHECK(a.mean == c.mean);
    CHECK(a.std_error == c.std_error);
  }
}

TEST_CASE("parameter validation") {
  auto p = quick(0.3);
  p.thinning = 0;
  CHECK_THROWS_AS(validate(p), Error);
  p = quick(-1.0);
  CHECK_THROWS_AS(validate(p), Error);
}
