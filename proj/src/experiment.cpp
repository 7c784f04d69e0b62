#include "treelab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include "treelab/exact_oracle.hpp"
#include "treelab/ising.hpp"
#include "treelab/percolation.hpp"
#include "treelab/product_graph.hpp"
#include "treelab/walk.hpp"

namespace treelab {

using nlohmann::json;

const char* version_string() noexcept { return TREELAB_VERSION; }

namespace {

const std::set<std::string>& known_commands() {
  static const std::set<std::string> c = {
      "constants",     "oracle",       "perc tau",       "perc chi",       "perc tilted",  "perc triangle",
      "perc pc",       "perc check-bound", "perc supermult", "perc open-cond", "ising twopoint", "ising bubble",
      "ising mag",     "ising betac",  "ising exponents", "walk dist",     "walk rho",     "walk entropy",
      "walk schramm",  "walk schramm-quenched", "graph dump"};
  return c;
}

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); }

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fmt_int(std::uint64_t v) { return std::to_string(v); }
std::string verdict(bool ok) { return ok ? "pass" : "fail"; }

std::string join_ints(const std::vector<int>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

// Defaults that depend on the command.
struct Resolved {
  ExperimentSpec spec;
  std::size_t replicas = 0;
};

std::size_t default_replicas(const std::string& cmd) {
  if (cmd == "oracle") return 100000;
  if (cmd == "perc pc") return 4000;
  if (starts_with(cmd, "ising")) return 2000;
  if (cmd == "walk schramm-quenched") return 20000;
  return 10000;
}

int default_radius(const std::string& cmd) {
  if (cmd == "perc check-bound") return 8;
  return 6;
}

Resolved resolve(const ExperimentSpec& in) {
  Resolved r{in, in.replicas ? in.replicas : default_replicas(in.command)};
  auto& s = r.spec;
  if (s.radii.empty()) {
    int radius = default_radius(s.command);
    // Walk balls must contain every endpoint.
    if (starts_with(s.command, "walk") && !s.n.empty()) radius = std::max(radius, *std::max_element(s.n.begin(), s.n.end()));
    s.radii.assign(s.trees.size(), radius);
  }
  if (s.direction.empty()) s.direction.assign(s.trees.size(), 1);
  if (s.m_ref == 0) s.m_ref = 200;
  if (s.command == "perc tilted" && s.lambda.empty()) s.lambda = {0.5};
  if ((s.command == "ising twopoint" || s.command == "ising bubble") && s.h.empty()) s.h = {0.0};
  s.replicas = r.replicas;
  return r;
}

VertexId descend(const ProductBall& ball, const std::vector<int>& depth) {
  ProductVertex v;
  for (std::size_t i = 0; i < ball.factors(); ++i) {
    if (depth[i] > ball.factor(i).radius)
      throw Error(ErrorKind::RadiusTooSmall, "target depth " + std::to_string(depth[i]) + " exceeds radius");
    v.coords.push_back(canonical_vertex(ball.factor(i).tree, 0, std::vector<std::uint8_t>(depth[i], 0)));
  }
  return ball.index(v);
}

std::vector<int> scaled(const std::vector<int>& dir, int n) {
  std::vector<int> d(dir);
  for (auto& x : d) x *= n;
  return d;
}

ProductBall make_ball(const ExperimentSpec& s) { return ProductBall(make_ball_spec(s.trees, s.radii)); }

IsingParams chain_params(const ExperimentSpec& s, std::size_t samples, double beta, double h) {
  IsingParams p;
  p.beta = beta;
  p.h = h;
  p.samples = samples;
  p.burn_in = s.burn_in;
  p.thinning = s.thinning;
  p.chains = s.chains;
  p.batches = s.batches;
  return p;
}

// Row builders for the three families. Every row ends with spec_hash, version.
class Emitter {
 public:
  Emitter(const Resolved& r, std::string family) : r_(r), family_(std::move(family)), hash_(spec_hash(r.spec)) {
    auto& c = table.columns;
    const auto& s = r.spec;
    if (family_ == "perc") {
      c = {"quantity", "p", "lambda"};
      for (std::size_t i = 0; i < s.radii.size(); ++i) c.push_back("R" + std::to_string(i + 1));
      c.insert(c.end(), {"mean", "stderr", "n", "seed", "reference", "verdict"});
    } else if (family_ == "ising") {
      c = {"quantity", "beta", "h"};
      for (std::size_t i = 0; i < s.radii.size(); ++i) c.push_back("R" + std::to_string(i + 1));
      c.insert(c.end(), {"mean", "stderr", "n_sweeps", "seed", "reference", "verdict"});
    } else if (family_ == "walk") {
      c = {"quantity", "kernel", "n", "p", "value", "stderr", "reference", "verdict", "replicas", "seed"};
    } else if (family_ == "constants") {
      c = {"quantity", "trees", "value"};
    } else {
      c = {"graph", "estimator", "exact", "mean", "stderr", "n", "seed", "verdict"};
    }
    c.insert(c.end(), {"spec_hash", "version"});
  }

  void perc(const std::string& q, std::string p, std::string lambda, const EstimateWithCI& e, std::string ref = "",
            std::string verd = "") {
    std::vector<std::string> row{q, std::move(p), std::move(lambda)};
    for (int R : r_.spec.radii) row.push_back(std::to_string(R));
    row.insert(row.end(), {format_number(e.mean), format_number(e.std_error), fmt_int(e.n_replicas),
                           fmt_int(r_.spec.seed), std::move(ref), std::move(verd)});
    push(std::move(row));
  }

  void ising(const std::string& q, std::string beta, std::string h, const EstimateWithCI& e, std::uint64_t sweeps,
             std::string ref = "", std::string verd = "") {
    std::vector<std::string> row{q, std::move(beta), std::move(h)};
    for (int R : r_.spec.radii) row.push_back(std::to_string(R));
    row.insert(row.end(), {format_number(e.mean), format_number(e.std_error), fmt_int(sweeps), fmt_int(r_.spec.seed),
                           std::move(ref), std::move(verd)});
    push(std::move(row));
  }

  void walk(const std::string& q, int n, std::string p, double value, std::string se, std::string ref,
            std::string verd, std::size_t replicas) {
    push({q, r_.spec.kernel, std::to_string(n), std::move(p), format_number(value), std::move(se), std::move(ref),
          std::move(verd), fmt_int(replicas), fmt_int(r_.spec.seed)});
  }

  void constant(const std::string& q, double v) { push({q, join_ints(r_.spec.trees, ' '), format_number(v)}); }

  void oracle(const OracleCheck& c) {
    push({c.graph, c.estimator, format_number(c.exact), format_number(c.mean), format_number(c.std_error),
          fmt_int(c.n), fmt_int(r_.spec.seed), verdict(c.agrees)});
  }

  Table table;

 private:
  void push(std::vector<std::string> row) {
    row.push_back(hash_);
    row.push_back(version_string());
    table.rows.push_back(std::move(row));
  }

  const Resolved& r_;
  std::string family_;
  std::string hash_;
};

std::string family_of(const std::string& cmd) {
  if (starts_with(cmd, "perc")) return "perc";
  if (starts_with(cmd, "ising")) return "ising";
  if (starts_with(cmd, "walk")) return "walk";
  if (cmd == "constants") return "constants";
  return "oracle";
}

KernelSpec kernel_of(const ExperimentSpec& s) {
  KernelSpec k;
  k.kind = kernel_kind_from_string(s.kernel);
  k.weights = s.weights;
  k.laziness = s.alpha;
  return k;
}

Execution execution_of(const Resolved& r) { return {r.spec.seed, r.spec.threads}; }

// ---------------------------------------------------------------- percolation

void run_perc(const Resolved& r, Emitter& out) {
  const auto& s = r.spec;
  const auto ex = execution_of(r);
  const std::string& cmd = s.command;
  const std::string none;

  if (cmd == "perc pc") {
    PcProtocol proto;
    proto.radii = s.radii;
    proto.replicas = r.replicas;
    proto.max_replicas = 16 * r.replicas;
    if (s.tolerance > 0) proto.tolerance = s.tolerance;
    const auto est = estimate_pc(make_product_spec(s.trees), proto, ex);
    for (const auto& st : est.search.steps)
      out.perc("flatness_ratio", format_number(st.x), none, {st.ratio, st.stderr_, st.replicas, CiMethod::normal});
    out.perc("pc", none, none, est.estimate);
    return;
  }

  const auto ball = make_ball(s);
  const auto& g = ball.graph();
  for (double p : s.p) {
    if (interrupt_requested()) return;
    const std::string ps = format_number(p);
    if (cmd == "perc tau") {
      std::vector<VertexId> targets;
      for (int n : s.n) targets.push_back(descend(ball, scaled(s.direction, n)));
      const auto est = estimate_tau_many(g, p, ball.origin(), targets, r.replicas, ex);
      for (std::size_t i = 0; i < est.size(); ++i) {
        std::string ref, verd;
        if (s.trees.size() == 1) {
          const double exact = tree_tau_exact(s.trees[0], p, s.n[i] * s.direction[0]);
          ref = format_number(exact);
          verd = verdict(est[i].contains(exact, s.z));
        }
        out.perc("tau_n" + std::to_string(s.n[i]), ps, none, est[i], ref, verd);
      }
    } else if (cmd == "perc chi") {
      out.perc("chi", ps, none, estimate_chi(g, p, ball.origin(), r.replicas, ex));
    } else if (cmd == "perc tilted") {
      for (double l : s.lambda) out.perc("chi_tilted", ps, format_number(l), estimate_tilted_chi(ball, p, l, r.replicas, ex));
    } else if (cmd == "perc triangle") {
      out.perc("triangle", ps, none, estimate_triangle(g, p, ball.origin(), r.replicas, ex));
    } else if (cmd == "perc check-bound") {
      const int max_l1 = s.n.empty() ? 8 : s.n.front();
      const auto pairs = pc_check_pairs(ball, max_l1);
      for (const auto& c : check_pc_estimate(ball, p, pairs, r.replicas, ex, s.z))
        out.perc("tau_d" + join_ints(c.d, '_'), ps, none, c.tau, format_number(c.bound), verdict(c.holds));
    } else if (cmd == "perc supermult") {
      std::vector<std::vector<int>> dirs;
      if (s.direction != std::vector<int>(s.trees.size(), 1) || s.trees.size() == 1) {
        dirs.push_back(s.direction);
      } else {
        std::vector<int> e1(s.trees.size(), 0);
        e1[0] = 1;
        dirs = {e1, s.direction};
      }
      for (const auto& dir : dirs)
        for (int a = 1; a <= s.r_max; ++a)
          for (int b = 1; b <= s.r_max; ++b) {
            if (interrupt_requested()) return;
            const auto row = check_supermultiplicativity(ball, p, dir, a, b, r.replicas, ex, s.z);
            out.perc("supermult_n" + join_ints(dir, '_') + "_r" + std::to_string(a) + "_l" + std::to_string(b), ps,
                     none, {row.slack, row.sigma, r.replicas, CiMethod::normal}, "0", verdict(row.holds));
          }
    } else if (cmd == "perc open-cond") {
      const auto rep = check_open_condition_bound(ball, p, s.eps, r.replicas, ex, s.z);
      out.perc("chi_p", ps, "0.5", rep.chi_p);
      out.perc("chi_p_plus_eps", format_number(p + s.eps), "0.5", rep.chi_p_eps, format_number(rep.bound),
               verdict(rep.holds));
    }
  }
}

// ---------------------------------------------------------------- ising

// Slope windows for the finite-size exponent proxies.
constexpr double kChiSlope = -1.0, kChiWindow = 0.3;
constexpr double kFieldSlope = 1.0 / 3.0, kFieldWindow = 0.15;
constexpr double kTreeWindow = 0.05;

void run_ising(const Resolved& r, Emitter& out) {
  const auto& s = r.spec;
  const auto ex = execution_of(r);
  const std::string& cmd = s.command;
  const std::string none;

  if (cmd == "ising betac") {
    BetacProtocol proto;
    proto.radii = s.radii;
    proto.samples = r.replicas;
    proto.max_samples = 8 * r.replicas;
    if (s.tolerance > 0) proto.tolerance = s.tolerance;
    const auto chain = chain_params(s, r.replicas, 0.0, 0.0);
    const auto est = estimate_betac(make_product_spec(s.trees), proto, chain, ex);
    for (const auto& st : est.search.steps)
      out.ising("flatness_ratio", format_number(std::atanh(st.x)), "0", {st.ratio, st.stderr_, st.replicas, CiMethod::normal},
                st.replicas * chain.chains);
    std::string ref, verd;
    if (s.trees.size() == 1) {
      ref = format_number(tree_betac(s.trees[0]));
      verd = verdict(std::abs(est.estimate.mean - tree_betac(s.trees[0])) <= 0.01);
    }
    out.ising("betac", none, "0", est.estimate, 0, ref, verd);
    return;
  }

  const auto ball = make_ball(s);
  const auto& g = ball.graph();

  if (cmd == "ising exponents") {
    double betac = 0.0;
    if (s.betac) {
      betac = *s.betac;
    } else {
      BetacProtocol proto;
      proto.radii = s.radii;
      proto.samples = r.replicas;
      proto.max_samples = 8 * r.replicas;
      betac = estimate_betac(make_product_spec(s.trees), proto, chain_params(s, r.replicas, 0, 0), ex).estimate.mean;
    }
    const auto params = chain_params(s, r.replicas, 0.0, 0.0);
    const auto chi = susceptibility_exponent(g, ball.origin(), betac, s.offsets, params, ex);
    const bool chi_ok = std::abs(chi.fit.slope - kChiSlope) <= kChiWindow;
    out.ising("slope_chi", format_number(betac), "0", {chi.fit.slope, chi.fit.slope_stderr, chi.fit.points, CiMethod::normal},
              params.total_sweeps() * s.offsets.size(), format_number(kChiSlope), verdict(chi_ok));
    const auto mag = field_exponent(g, ball.origin(), betac, s.fields, params, ex);
    const bool mag_ok = std::abs(mag.fit.slope - kFieldSlope) <= kFieldWindow;
    out.ising("slope_field", format_number(betac), none, {mag.fit.slope, mag.fit.slope_stderr, mag.fit.points, CiMethod::normal},
              params.total_sweeps() * s.fields.size(), format_number(kFieldSlope), verdict(mag_ok));
    if (s.trees.size() == 1) {
      const auto tree = tree_susceptibility_exponent(s.trees[0], s.offsets);
      const bool ok = std::abs(tree.fit.slope - kChiSlope) <= kTreeWindow;
      out.ising("tree_slope_chi", format_number(tree_betac(s.trees[0])), "0",
                {tree.fit.slope, tree.fit.slope_stderr, tree.fit.points, CiMethod::exact}, 0, format_number(kChiSlope),
                verdict(ok));
    }
    return;
  }

  for (double beta : s.beta) {
    for (double h : s.h) {
      if (interrupt_requested()) return;
      const auto params = chain_params(s, r.replicas, beta, h);
      const std::string bs = format_number(beta), hs = format_number(h);
      if (cmd == "ising twopoint") {
        std::vector<VertexId> targets;
        for (int n : s.n) targets.push_back(descend(ball, scaled(s.direction, n)));
        const auto est = estimate_two_point_many(g, ball.origin(), targets, params, ex);
        for (std::size_t i = 0; i < est.size(); ++i) {
          std::string ref, verd;
          if (s.trees.size() == 1) {
            const double exact = tree_ising_exact(s.trees[0], beta, s.n[i] * s.direction[0]);
            ref = format_number(exact);
            verd = verdict(est[i].contains(exact, s.z));
          }
          out.ising("twopoint_n" + std::to_string(s.n[i]), bs, hs, est[i], params.total_sweeps(), ref, verd);
        }
      } else if (cmd == "ising bubble") {
        out.ising("bubble", bs, hs, estimate_bubble(g, ball.origin(), params, ex), 2 * params.total_sweeps());
      } else if (cmd == "ising mag") {
        out.ising("magnetization", bs, hs, estimate_magnetization(g, ball.origin(), params, ex), params.total_sweeps());
      }
    }
  }
}

// ---------------------------------------------------------------- walks

void run_walk(const Resolved& r, Emitter& out) {
  const auto& s = r.spec;
  const auto ex = execution_of(r);
  const std::string& cmd = s.command;
  const auto kernel = kernel_of(s);
  const auto trees = make_product_spec(s.trees);
  const int n_max = *std::max_element(s.n.begin(), s.n.end());
  // rho and entropy come from the exact distance chain; no ball is built.
  const bool needs_ball = cmd == "walk dist" || starts_with(cmd, "walk schramm");
  const std::optional<ProductBall> ball = needs_ball ? std::optional<ProductBall>(make_ball(s)) : std::nullopt;

  if (cmd == "walk dist") {
    for (int n : s.n) {
      const auto d = exact_distribution(*ball, kernel, n);
      out.walk("mass", n, "", d.mass(), "", "1", verdict(std::abs(d.mass() - 1.0) <= 1e-12), 0);
      out.walk("return", n, "", d.at(ball->origin()), "", "", "", 0);
      out.walk("sup", n, "", d.sup(), "", "", "", 0);
      out.walk("entropy", n, "", d.entropy(), "", "", "", 0);
      out.walk("support", n, "", static_cast<double>(d.support.size()), "", "", "", 0);
    }
  } else if (cmd == "walk rho") {
    const auto b = spectral_radius_bounds(trees, kernel, n_max);
    const std::string target = format_number(b.target);
    for (int n : s.n) {
      if (n < 1) invalid("walk rho needs n >= 1");
      const auto i = static_cast<std::size_t>(n - 1);
      out.walk("return_root", n, "", b.return_root[i], "", target, verdict(b.return_root[i] <= b.target + 1e-12), 0);
      out.walk("sup_root", n, "", b.sup_root[i], "", target, verdict(b.sup_root[i] <= b.target + 1e-12), 0);
    }
    bool mono = true;
    for (std::size_t i = 1; i < b.return_root.size(); ++i) mono = mono && b.return_root[i] >= b.return_root[i - 1] - 1e-12;
    bool super = true;
    for (std::size_t a = 1; a <= b.sup_value.size(); ++a)
      for (std::size_t c = 1; a + c <= b.sup_value.size(); ++c)
        super = super && b.sup_value[a + c - 1] >= b.sup_value[a - 1] * b.sup_value[c - 1] * (1.0 - 1e-12);
    out.walk("return_root_monotone", n_max, "", mono ? 1.0 : 0.0, "", "1", verdict(mono), 0);
    out.walk("sup_supermultiplicative", n_max, "", super ? 1.0 : 0.0, "", "1", verdict(super), 0);
    out.walk("rho_target", n_max, "", b.target, "", "", "", 0);
  } else if (cmd == "walk entropy") {
    const auto h = entropy_sequence(trees, kernel, n_max);
    for (int n : s.n) {
      out.walk("entropy", n, "", h[static_cast<std::size_t>(n)], "", "", "", 0);
      if (n > 0) out.walk("entropy_rate", n, "", h[static_cast<std::size_t>(n)] / n, "", "", "", 0);
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (int a = 1; a <= n_max; ++a)
      for (int b = 1; a + b <= n_max; ++b)
        worst = std::max(worst, h[static_cast<std::size_t>(a + b)] - h[static_cast<std::size_t>(a)] - h[static_cast<std::size_t>(b)]);
    if (n_max >= 2) out.walk("subadditivity_excess", n_max, "", worst, "", "0", verdict(worst <= 1e-9), 0);
  } else if (cmd == "walk schramm") {
    for (double p : s.p)
      for (int n : s.n) {
        if (interrupt_requested()) return;
        const auto rep = schramm_annealed_check(*ball, kernel, p, n, s.m_ref, r.replicas, ex, s.z);
        const std::string ps = format_number(p), se = format_number(rep.expectation.std_error);
        out.walk("annealed_strict", n, ps, rep.expectation.mean, se, format_number(rep.strict_reference),
                 verdict(rep.strict_holds), rep.expectation.n_replicas);
        out.walk("annealed_rho", n, ps, rep.expectation.mean, se, format_number(rep.rho_reference),
                 verdict(rep.rho_holds), rep.expectation.n_replicas);
        if (rep.has_exact)
          out.walk("annealed_exact", n, ps, rep.expectation.mean, se, format_number(rep.exact),
                   verdict(rep.exact_agrees), rep.expectation.n_replicas);
      }
  } else if (cmd == "walk schramm-quenched") {
    for (double p : s.p)
      for (int n : s.n) {
        if (interrupt_requested()) return;
        const auto rep = schramm_quenched_check(*ball, kernel, p, n, s.m_ref, r.replicas, ex, s.bias_tolerance, s.z);
        const std::string ps = format_number(p), se = format_number(rep.mean_log_tau.std_error);
        out.walk("quenched_entropy", n, ps, rep.mean_log_tau.mean, se, format_number(rep.reference), verdict(rep.holds),
                 rep.mean_log_tau.n_replicas);
        out.walk("quenched_log_bias", n, ps, rep.log_bias, "", format_number(rep.bias_tolerance),
                 verdict(rep.log_bias <= rep.bias_tolerance), rep.mean_log_tau.n_replicas);
        if (rep.has_exact)
          out.walk("quenched_exact", n, ps, rep.mean_log_tau.mean, se, format_number(rep.exact),
                   verdict(rep.exact_agrees), rep.mean_log_tau.n_replicas);
      }
  }
}

void check_list(const std::vector<double>& v, const char* name, double lo, double hi) {
  if (v.empty()) invalid(std::string("--") + name + " is required for this command");
  for (double x : v)
    if (!(x >= lo && x <= hi)) invalid(std::string(name) + " out of range: " + format_number(x));
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::CapacityExceeded:
    case ErrorKind::TooLarge:
    case ErrorKind::NoConvergence:
    case ErrorKind::InsufficientPrecision:
    case ErrorKind::DenominatorNonpositive:
      return 3;
    default:
      return 2;
  }
}

ExperimentSpec spec_from_json(const json& j) {
  if (!j.is_object()) invalid("config must be a JSON object");
  static const std::set<std::string> keys = {
      "command", "trees",   "radii",   "p",       "beta",     "h",         "lambda",   "n",
      "replicas", "seed",   "threads", "out",     "format",   "kernel",    "weights",  "alpha",
      "m_ref",   "eps",     "direction", "r_max", "z",        "tolerance", "bias_tolerance", "betac",
      "offsets", "fields",  "burn_in", "thinning", "chains",  "batches",   "suite"};
  for (const auto& [k, v] : j.items())
    if (!keys.count(k)) invalid("unknown config key '" + k + "'");
  ExperimentSpec s;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("command", s.command);
    get("trees", s.trees);
    get("radii", s.radii);
    get("p", s.p);
    get("beta", s.beta);
    get("h", s.h);
    get("lambda", s.lambda);
    get("n", s.n);
    get("replicas", s.replicas);
    get("seed", s.seed);
    get("threads", s.threads);
    get("out", s.out);
    get("format", s.format);
    get("kernel", s.kernel);
    get("weights", s.weights);
    get("alpha", s.alpha);
    get("m_ref", s.m_ref);
    get("eps", s.eps);
    get("direction", s.direction);
    get("r_max", s.r_max);
    get("z", s.z);
    get("tolerance", s.tolerance);
    get("bias_tolerance", s.bias_tolerance);
    if (j.contains("betac") && !j.at("betac").is_null()) s.betac = j.at("betac").get<double>();
    get("offsets", s.offsets);
    get("fields", s.fields);
    get("burn_in", s.burn_in);
    get("thinning", s.thinning);
    get("chains", s.chains);
    get("batches", s.batches);
    get("suite", s.suite);
  } catch (const json::exception& e) {
    invalid(std::string("config: ") + e.what());
  }
  return s;
}

json canonical_json(const ExperimentSpec& s) {
  json j;
  j["command"] = s.command;
  j["trees"] = s.trees;
  j["radii"] = s.radii;
  j["p"] = s.p;
  j["beta"] = s.beta;
  j["h"] = s.h;
  j["lambda"] = s.lambda;
  j["n"] = s.n;
  j["replicas"] = s.replicas;
  j["seed"] = s.seed;
  j["kernel"] = s.kernel;
  j["weights"] = s.weights;
  j["alpha"] = s.alpha;
  j["m_ref"] = s.m_ref;
  j["eps"] = s.eps;
  j["direction"] = s.direction;
  j["r_max"] = s.r_max;
  j["z"] = s.z;
  j["tolerance"] = s.tolerance;
  j["bias_tolerance"] = s.bias_tolerance;
  j["betac"] = s.betac ? json(*s.betac) : json(nullptr);
  j["offsets"] = s.offsets;
  j["fields"] = s.fields;
  j["burn_in"] = s.burn_in;
  j["thinning"] = s.thinning;
  j["chains"] = s.chains;
  j["batches"] = s.batches;
  j["suite"] = s.suite;
  return j;
}

std::string spec_hash(const ExperimentSpec& s) { return fnv1a_hex(canonical_json(s).dump()); }

void validate(const ExperimentSpec& in) {
  if (!known_commands().count(in.command)) invalid("unknown command '" + in.command + "'");
  if (in.format != "csv" && in.format != "json") invalid("format must be csv or json");
  if (in.threads == 0 || in.threads > 256) invalid("threads must lie in [1, 256]");
  const auto r = resolve(in);
  const auto& s = r.spec;
  if (s.command == "oracle") {
    if (s.suite != "tiny") invalid("only the tiny suite exists");
    return;
  }
  if (s.trees.empty()) invalid("--trees is empty");
  for (int k : s.trees)
    if (k < 3 || k > 255) invalid("tree degrees must lie in [3, 255]");
  (void)make_product_spec(s.trees);
  if (s.command == "constants") {
    if (!s.p.empty()) check_list(s.p, "p", 0.0, 1.0);
    return;
  }
  if (s.radii.size() != s.trees.size()) invalid("one radius per tree");
  for (int R : s.radii)
    if (R < 0) invalid("radii must be nonnegative");
  if (s.direction.size() != s.trees.size()) invalid("one direction entry per tree");
  for (int d : s.direction)
    if (d < 0) invalid("direction entries must be nonnegative");
  if (!(s.z > 0.0)) invalid("z must be positive");
  for (int n : s.n)
    if (n < 0) invalid("n must be nonnegative");
  if (r.replicas == 0) invalid("replicas must be positive");

  // Capacity: the ball actually needed, checked before any allocation.
  const bool lumped = s.command == "walk rho" || s.command == "walk entropy";
  if (!lumped) {
    auto ball_spec = make_ball_spec(s.trees, s.radii);
    if (s.command == "perc pc" || s.command == "ising betac")
      for (auto& R : ball_spec.radii) R += 4;
    if (ball_vertex_count(ball_spec) > ball_spec.max_vertices)
      throw Error(ErrorKind::CapacityExceeded,
                  "ball has " + std::to_string(ball_vertex_count(ball_spec)) + " vertices");
  }

  const std::string& c = s.command;
  const auto need_n = [&] {
    if (s.n.empty()) invalid("--n is required for this command");
  };
  if (c == "perc tau" || c == "perc chi" || c == "perc tilted" || c == "perc triangle" || c == "perc check-bound" ||
      c == "perc supermult" || c == "perc open-cond" || c == "walk schramm" || c == "walk schramm-quenched")
    check_list(s.p, "p", 0.0, 1.0);
  if (c == "perc tilted" && !s.lambda.empty()) check_list(s.lambda, "lambda", -50.0, 50.0);
  if (c == "perc tau" || c == "ising twopoint") {
    need_n();
    for (int n : s.n)
      for (std::size_t i = 0; i < s.trees.size(); ++i)
        if (n * s.direction[i] > s.radii[i]) throw Error(ErrorKind::RadiusTooSmall, "target outside the ball");
  }
  if (c == "perc supermult") {
    if (s.r_max < 1) invalid("r_max must be at least 1");
    for (std::size_t i = 0; i < s.trees.size(); ++i)
      if (2 * s.r_max * s.direction[i] > s.radii[i])
        throw Error(ErrorKind::RadiusTooSmall, "ball too small for r, l up to r_max");
  }
  if (c == "perc open-cond" && !(s.eps >= 0.0)) invalid("eps must be nonnegative");
  if (starts_with(c, "ising")) {
    if (s.chains == 0 || s.thinning == 0 || s.batches < 30) invalid("bad chain parameters (at least 30 batches)");
    if (c != "ising betac" && c != "ising exponents") {
      check_list(s.beta, "beta", 0.0, 50.0);
      const bool zero_field = c == "ising twopoint" || c == "ising bubble";
      if (!(zero_field && s.h.empty())) check_list(s.h, "h", 0.0, 50.0);
    }
    if (c == "ising twopoint")
      for (double h : s.h)
        if (h != 0.0) throw Error(ErrorKind::ConstraintViolation, "twopoint needs h = 0");
    if (c == "ising mag")
      for (double h : s.h)
        if (!(h > 0.0)) throw Error(ErrorKind::FieldRequired, "magnetization needs h > 0");
    if (c == "ising exponents") {
      if (s.offsets.size() < 2 || s.fields.size() < 2) invalid("exponents need --offsets and --fields (>= 2 each)");
      for (double o : s.offsets)
        if (!(o > 0.0)) invalid("offsets must be positive");
      for (double h : s.fields)
        if (!(h > 0.0)) invalid("fields must be positive");
      if (s.betac && !(*s.betac > 0.0)) invalid("betac must be positive");
    }
  }
  if (starts_with(c, "walk")) {
    need_n();
    (void)resolve_kernel(kernel_of(s), make_product_spec(s.trees));
    const int n_max = *std::max_element(s.n.begin(), s.n.end());
    const bool lumped = c == "walk rho" || c == "walk entropy";
    for (std::size_t i = 0; i < s.radii.size() && !lumped; ++i)
      if (s.radii[i] < n_max)
        throw Error(ErrorKind::RadiusTooSmall, "walk needs every radius >= n (" + std::to_string(n_max) + ")");
    if (c == "walk rho")
      for (int n : s.n)
        if (n < 1) invalid("walk rho needs n >= 1");
    if (c == "walk schramm-quenched") {
      for (int n : s.n)
        if (n < 1) invalid("quenched check needs n >= 1");
      for (double p : s.p)
        if (!(p > 0.0)) invalid("quenched check needs p > 0");
    }
    if (s.m_ref < 1) invalid("m_ref must be positive");
  }
}

RunOutput run(const ExperimentSpec& spec) {
  validate(spec);
  const auto r = resolve(spec);
  const auto& s = r.spec;
  Emitter out(r, family_of(s.command));
  if (s.command == "constants") {
    const double pc = s.p.empty() ? -1.0 : s.p.front();
    const auto c = compute_bound_constants(make_product_spec(s.trees), pc);
    out.constant("chi_bound", c.chi_bound);
    out.constant("triangle_bound", c.triangle_bound);
    out.constant("bubble_bound", c.bubble_bound);
    if (c.has_gap) out.constant("pu_gap_bound", c.pu_gap_bound);
  } else if (s.command == "oracle") {
    OracleSuiteParams params;
    params.replicas = r.replicas;
    for (const auto& c : run_oracle_suite(params, execution_of(r))) out.oracle(c);
  } else if (starts_with(s.command, "perc")) {
    run_perc(r, out);
  } else if (starts_with(s.command, "ising")) {
    run_ising(r, out);
  } else if (starts_with(s.command, "walk")) {
    run_walk(r, out);
  } else {
    invalid("graph dump is rendered by the CLI");
  }

  RunOutput res;
  res.partial = interrupt_requested();
  res.table = std::move(out.table);
  json rows = json::array();
  for (const auto& row : res.table.rows) {
    json o = json::object();
    for (std::size_t i = 0; i < res.table.columns.size(); ++i) o[res.table.columns[i]] = row[i];
    rows.push_back(std::move(o));
  }
  res.summary = {{"spec", canonical_json(s)},
                 {"spec_hash", spec_hash(s)},
                 {"version", version_string()},
                 {"generator", std::string(kGeneratorId)},
                 {"replicas", r.replicas},
                 {"partial", res.partial},
                 {"columns", res.table.columns},
                 {"rows", std::move(rows)}};
  return res;
}

std::string to_csv(const Table& t) {
  std::string s;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    s += '\n';
  };
  line(t.columns);
  for (const auto& r : t.rows) line(r);
  return s;
}

std::string to_json_text(const RunOutput& out) { return out.summary.dump(2) + "\n"; }

// ---------------------------------------------------------------- oracle suite

std::vector<OracleCheck> run_oracle_suite(const OracleSuiteParams& prm, const Execution& ex) {
  std::vector<OracleCheck> checks;
  auto add = [&](const TinyGraph& tg, const char* name, double exact, const EstimateWithCI& e) {
    OracleCheck c{tg.name, name, exact, e.mean, e.std_error, e.n_replicas, false};
    c.agrees = e.std_error > 0.0 || e.method == CiMethod::wilson ? e.contains(exact, prm.z)
                                                                   : std::abs(e.mean - exact) <= 1e-12;
    checks.push_back(c);
  };
  for (const auto& tg : tiny_graph_catalog()) {
    if (interrupt_requested()) break;
    const Graph g = tg.graph();
    const VertexId x = 0;
    const auto y = static_cast<VertexId>(tg.vertex_count - 1);
    const ConnectionTable table(tg);
    add(tg, "tau", table.tau(prm.p, x, y), estimate_tau(g, prm.p, x, y, prm.replicas, ex));
    add(tg, "chi", table_chi(table, prm.p, x), estimate_chi(g, prm.p, x, prm.replicas, ex));
    add(tg, "chi_tilted", table_tilted_chi(table, tg, prm.p, prm.lambda, x),
        estimate_tilted_chi(g, tg.log_weight, prm.p, prm.lambda, x, prm.replicas, ex));
    add(tg, "triangle", table_triangle(table, prm.p, x), estimate_triangle(g, prm.p, x, prm.replicas, ex));

    IsingParams ip;
    ip.beta = prm.beta;
    ip.chains = 4;
    ip.samples = prm.replicas / ip.chains;
    ip.burn_in = 100;
    ip.thinning = 1;
    ip.batches = 64;
    add(tg, "ising_two_point", brute_ising_two_point(tg, prm.beta, x, y), estimate_two_point(g, x, y, ip, ex));
    add(tg, "ising_susceptibility", brute_ising_susceptibility(tg, prm.beta, x),
        estimate_susceptibility(g, x, ip, ex));
    add(tg, "ising_bubble", brute_ising_bubble(tg, prm.beta, x), estimate_bubble(g, x, ip, ex));
    ip.h = prm.h;
    add(tg, "ising_magnetization", brute_ising_magnetization(tg, prm.beta, prm.h, x),
        estimate_magnetization(g, x, ip, ex));
  }
  return checks;
}

}  // namespace treelab
