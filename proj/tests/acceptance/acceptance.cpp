// Acceptance suite: one PASS/FAIL line per criterion, details indented.
// Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "treelab/exact_oracle.hpp"
#include "treelab/experiment.hpp"
#include "treelab/ising.hpp"
#include "treelab/percolation.hpp"
#include "treelab/walk.hpp"

using namespace treelab;

namespace {

constexpr double kZ = 3.0;
const Execution kEx{20180911, 1};

ProductBall ball_of(std::vector<int> deg, std::vector<int> rad) { return ProductBall(make_ball_spec(deg, rad)); }
ProductSpec trees_of(std::vector<int> deg) { return make_product_spec(deg); }

struct Tally {
  bool ok = true;
  void need(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      std::printf("    failed: %s\n", what.c_str());
    }
  }
};

IsingParams chain(double beta, double h, std::size_t samples) {
  // Cheaper than the CLI defaults: at these sizes the SW chain decorrelates
  // within a few sweeps.
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

std::string fmt(const EstimateWithCI& e) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g +- %.2g", e.mean, e.std_error);
  return buf;
}

// Thresholds shared by several criteria, estimated once.
struct Thresholds {
  double pc = 0.0;
  EstimateWithCI pc_est;
  double betac = 0.0;
  EstimateWithCI betac_est;
};

Thresholds estimate_thresholds() {
  Thresholds t;
  PcProtocol pp;
  pp.radii = {3, 3};
  t.pc_est = estimate_pc(trees_of({3, 3}), pp, kEx).estimate;
  t.pc = t.pc_est.mean;
  BetacProtocol bp;
  bp.radii = {2, 2};
  bp.samples = 1000;
  bp.max_samples = 8000;
  t.betac_est = estimate_betac(trees_of({3, 3}), bp, chain(0.0, 0.0, 0), kEx).estimate;
  t.betac = t.betac_est.mean;
  std::printf("  T3xT3 thresholds: p_c = %s, beta_c = %s\n", fmt(t.pc_est).c_str(), fmt(t.betac_est).c_str());
  return t;
}

bool criterion1() {
  Tally t;
  OracleSuiteParams params;
  params.replicas = 100000;
  const auto checks = run_oracle_suite(params, kEx);
  std::set<std::string> graphs, estimators;
  for (const auto& c : checks) {
    graphs.insert(c.graph);
    estimators.insert(c.estimator);
    t.need(c.agrees, c.graph + "/" + c.estimator + ": exact " + std::to_string(c.exact) + " vs " +
                         std::to_string(c.mean) + " +- " + std::to_string(c.std_error));
  }
  for (const char* e : {"tau", "chi", "chi_tilted", "triangle", "ising_two_point", "ising_bubble", "ising_magnetization"})
    t.need(estimators.count(e) == 1, std::string("estimator covered: ") + e);
  t.need(graphs.size() >= 5, "at least five tiny graphs");
  std::printf("  %zu checks on %zu graphs\n", checks.size(), graphs.size());
  return t.ok;
}

bool criterion2() {
  Tally t;
  const auto tree = ball_of({3}, {8});
  std::vector<std::vector<int>> classes;
  for (int d = 0; d <= 6; ++d) classes.push_back({d});
  const auto tau = estimate_tau_classes(tree, 0.5, classes, 100000, kEx);
  for (const auto& c : tau.classes) {
    const double exact = std::pow(2.0, -c.d[0]);
    t.need(c.tau.contains(exact, kZ), "tau at d=" + std::to_string(c.d[0]) + ": " + fmt(c.tau));
  }
  PcProtocol pp;
  pp.radii = {8};
  const auto pc = estimate_pc(trees_of({3}), pp, kEx).estimate;
  t.need(std::abs(pc.mean - 0.5) <= 0.01, "p_c " + fmt(pc));
  BetacProtocol bp;
  bp.radii = {6};
  bp.samples = 2000;
  bp.max_samples = 16000;
  bp.tolerance = 0.004;
  auto ch = chain(0.0, 0.0, 0);
  ch.burn_in = 50;
  const auto bc = estimate_betac(trees_of({3}), bp, ch, kEx).estimate;
  t.need(std::abs(bc.mean - 0.5493) <= 0.01, "beta_c " + fmt(bc));
  std::printf("  tree p_c = %s, beta_c = %s\n", fmt(pc).c_str(), fmt(bc).c_str());
  const auto small = ball_of({3}, {6});
  std::vector<VertexId> targets;
  for (int d = 0; d <= 4; ++d) targets.push_back(small.sphere(std::vector<int>{d}).front());
  for (double beta : {0.3, 0.5}) {
    const auto est = estimate_two_point_many(small, 0, targets, chain(beta, 0.0, 5000), kEx);
    for (int d = 0; d <= 4; ++d)
      t.need(est[d].contains(std::pow(std::tanh(beta), d), kZ),
             "spin correlation beta=" + std::to_string(beta) + " d=" + std::to_string(d) + ": " + fmt(est[d]));
  }
  return t.ok;
}

bool criterion3(const Thresholds& th) {
  Tally t;
  const auto ball = ball_of({3, 3}, {8, 8});
  const auto pairs = pc_check_pairs(ball, 8);
  const auto rows = check_pc_estimate(ball, th.pc, pairs, 20000, kEx, kZ);
  double worst = -1.0;
  for (const auto& r : rows) {
    worst = std::max(worst, r.tau.mean / r.bound);
    t.need(r.holds, "d=(" + std::to_string(r.d[0]) + "," + std::to_string(r.d[1]) + "): " + fmt(r.tau) +
                        " vs bound " + std::to_string(r.bound));
  }
  t.need(rows.size() == 45, "all distance vectors with |d|_1 <= 8 tested");
  std::printf("  %zu pairs, largest estimate/bound ratio %.3f\n", rows.size(), worst);
  return t.ok;
}

bool criterion4(const Thresholds& th) {
  Tally t;
  const auto c = compute_bound_constants(trees_of({3, 3}), th.pc);
  const auto ball = ball_of({3, 3}, {6, 6});
  const auto chi = estimate_tilted_chi(ball, th.pc, 0.5, 20000, kEx);
  const auto tri = estimate_triangle(ball, th.pc, ball.origin(), 4000, kEx);
  t.need(chi.below_bound(c.chi_bound, kZ), "tilted chi " + fmt(chi));
  t.need(tri.below_bound(c.triangle_bound, kZ), "triangle " + fmt(tri));
  const auto ib = ball_of({3, 3}, {4, 4});
  const auto bub = estimate_bubble(ib, ib.origin(), chain(th.betac, 0.0, 1000), kEx);
  t.need(bub.below_bound(c.bubble_bound, kZ), "bubble " + fmt(bub));
  std::printf("  tilted chi %s <= %.5g; triangle %s <= %.5g; bubble %s <= %.5g\n", fmt(chi).c_str(), c.chi_bound,
              fmt(tri).c_str(), c.triangle_bound, fmt(bub).c_str(), c.bubble_bound);
  return t.ok;
}

bool criterion5(const Thresholds& th) {
  Tally t;
  const auto ball = ball_of({3, 3}, {6, 6});
  int n_checks = 0;
  for (double p : {0.2, th.pc})
    for (const std::vector<int>& dir : {std::vector<int>{1, 0}, std::vector<int>{1, 1}})
      for (int r = 1; r <= 3; ++r)
        for (int l = 1; l <= 3; ++l) {
          const auto row = check_supermultiplicativity(ball, p, dir, r, l, 20000, kEx, kZ);
          ++n_checks;
          t.need(row.holds, "p=" + std::to_string(p) + " dir=(" + std::to_string(dir[0]) + "," +
                                std::to_string(dir[1]) + ") r=" + std::to_string(r) + " l=" + std::to_string(l) +
                                " slack " + std::to_string(row.slack) + " sigma " + std::to_string(row.sigma));
        }
  std::printf("  %d inequalities checked\n", n_checks);
  return t.ok;
}

bool criterion6(const Thresholds& th) {
  Tally t;
  const auto ball = ball_of({3, 3}, {6, 6});
  const std::vector<double> offsets = {0.02, 0.04, 0.06, 0.08};
  // Below h ~ 0.02 the finite ball responds linearly; above ~ 0.3 M saturates.
  const std::vector<double> fields = {0.02, 0.04, 0.08, 0.16, 0.32};
  const auto p = chain(0.0, 0.0, 500);
  const auto chi = susceptibility_exponent(ball, ball.origin(), th.betac, offsets, p, kEx);
  const auto mag = field_exponent(ball, ball.origin(), th.betac, fields, p, kEx);
  const auto tree = tree_susceptibility_exponent(3, std::vector<double>{0.005, 0.01, 0.02, 0.04});
  t.need(std::abs(chi.fit.slope + 1.0) <= 0.3, "chi slope " + std::to_string(chi.fit.slope));
  t.need(std::abs(mag.fit.slope - 1.0 / 3.0) <= 0.15, "field slope " + std::to_string(mag.fit.slope));
  t.need(std::abs(tree.fit.slope + 1.0) <= 0.05, "tree slope " + std::to_string(tree.fit.slope));
  std::printf("  chi slope %.4f +- %.3f, field slope %.4f +- %.3f, tree slope %.4f (finite-size proxies)\n",
              chi.fit.slope, chi.fit.slope_stderr, mag.fit.slope, mag.fit.slope_stderr, tree.fit.slope);
  return t.ok;
}

bool criterion7(const Thresholds& th) {
  Tally t;
  const KernelSpec srw;
  for (const KernelSpec& k : {srw, KernelSpec{KernelKind::lazy, {}, 0.5}}) {
    const auto d = exact_distribution(ball_of({3}, {12}), k, 12);
    t.need(std::abs(d.mass() - 1.0) <= 1e-12, "mass at n=12 on the tree ball");
    const auto dp = exact_distribution(ball_of({3, 3}, {6, 6}), k, 6);
    t.need(std::abs(dp.mass() - 1.0) <= 1e-12, "mass at n=6 on the product ball");
    DistanceLaw law(trees_of({3, 3}), k, 200);
    for (int i = 0; i < 200; ++i) law.step();
    t.need(std::abs(law.mass() - 1.0) <= 1e-12, "mass of the distance law at n=200");
  }
  const auto s = spectral_radius_bounds(trees_of({3, 3}), srw, 200);
  bool monotone = true, supermult = true;
  for (std::size_t i = 1; i < s.return_root.size(); ++i) monotone &= s.return_root[i] >= s.return_root[i - 1] - 1e-12;
  for (std::size_t a = 1; a <= 100; ++a)
    for (std::size_t b = 1; a + b <= 200; ++b)
      supermult &= s.sup_value[a + b - 1] >= s.sup_value[a - 1] * s.sup_value[b - 1] * (1 - 1e-12);
  t.need(monotone, "return-probability roots nondecreasing");
  t.need(supermult, "sup P^n supermultiplicative");

  const auto ball = ball_of({3, 3}, {8, 8});
  for (int n : {2, 4, 6, 8}) {
    const auto r = schramm_annealed_check(ball, srw, th.pc, n, 200, 20000, kEx, kZ);
    t.need(r.strict_holds && r.rho_holds, "annealed n=" + std::to_string(n) + ": " + fmt(r.expectation));
    std::printf("  annealed n=%d: %s vs strict %.4f, rho^n %.4f\n", n, fmt(r.expectation).c_str(), r.strict_reference,
                r.rho_reference);
  }
  const auto qb = ball_of({3, 3}, {6, 6});
  const auto q = schramm_quenched_check(qb, srw, th.pc, 6, 200, 20000, kEx, 0.01, kZ);
  t.need(q.holds, "quenched n=6: " + fmt(q.mean_log_tau));
  t.need(q.log_bias <= q.bias_tolerance, "quenched bias budget");
  std::printf("  quenched n=6: %s vs %.4f (log bias %.2g)\n", fmt(q.mean_log_tau).c_str(), q.reference, q.log_bias);

  const auto tree = ball_of({3}, {8});
  for (int n : {1, 4, 8}) {
    const auto a = schramm_annealed_check(tree, srw, 0.5, n, 100, 40000, kEx, kZ);
    t.need(a.has_exact && a.exact_agrees, "tree annealed n=" + std::to_string(n));
    const auto qq = schramm_quenched_check(tree, srw, 0.5, n, 100, 20000, kEx, 0.01, kZ);
    t.need(qq.has_exact && qq.exact_agrees, "tree quenched n=" + std::to_string(n));
  }
  return t.ok;
}

bool criterion8() {
  Tally t;
  std::vector<ExperimentSpec> specs;
  auto add = [&](const std::string& cmd, const std::function<void(ExperimentSpec&)>& f) {
    ExperimentSpec s;
    s.command = cmd;
    f(s);
    specs.push_back(s);
  };
  add("perc tau", [](auto& s) { s.radii = {4, 4}; s.p = {0.21}; s.n = {0, 1, 2, 3}; s.replicas = 5000; });
  add("perc tilted", [](auto& s) { s.radii = {4, 4}; s.p = {0.21}; s.replicas = 3000; });
  add("perc supermult", [](auto& s) { s.radii = {5, 5}; s.p = {0.2}; s.n = {1}; s.r_max = 2; s.replicas = 2000; });
  add("ising twopoint", [](auto& s) {
    s.radii = {3, 3}; s.beta = {0.2}; s.n = {0, 1, 2}; s.replicas = 800; s.burn_in = 20; s.thinning = 2;
  });
  add("walk schramm-quenched", [](auto& s) { s.radii = {4, 4}; s.p = {0.21}; s.n = {2, 3}; s.replicas = 4000; s.m_ref = 50; });
  for (auto s : specs) {
    s.threads = 1;
    const auto ref = run(s);
    const auto csv = to_csv(ref.table), json = to_json_text(ref);
    for (unsigned threads : {4u, 8u}) {
      s.threads = threads;
      const auto got = run(s);
      t.need(to_csv(got.table) == csv && to_json_text(got) == json,
             s.command + " differs at " + std::to_string(threads) + " threads");
    }
  }
  std::printf("  %zu commands compared at 1, 4 and 8 threads\n", specs.size());
  return t.ok;
}

bool timed(int id, const char* title, const std::function<bool()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = body();
  } catch (const std::exception& e) {
    std::printf("    error: %s\n", e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, title, secs);
  std::fflush(stdout);
  return ok;
}

}  // namespace

int main() {
  std::printf("treelab %s acceptance suite\n", version_string());
  bool all = true;
  all &= timed(1, "estimators match exact enumeration on tiny graphs", criterion1);
  all &= timed(2, "single-tree equality cases and thresholds", criterion2);
  const auto th = estimate_thresholds();
  all &= timed(3, "two-point bound at the product threshold on radii (8,8)", [&] { return criterion3(th); });
  all &= timed(4, "tilted susceptibility, triangle and bubble below their constants", [&] { return criterion4(th); });
  all &= timed(5, "supermultiplicativity along geodesics", [&] { return criterion5(th); });
  all &= timed(6, "critical exponent windows", [&] { return criterion6(th); });
  all &= timed(7, "walk kernel invariants and Schramm checks", [&] { return criterion7(th); });
  all &= timed(8, "byte-identical output across thread counts", criterion8);
  return all ? 0 : 1;
}
