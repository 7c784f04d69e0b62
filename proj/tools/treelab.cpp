// treelab command-line driver.

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "treelab/errors.hpp"
#include "treelab/experiment.hpp"
#include "treelab/parallel.hpp"
#include "treelab/product_graph.hpp"

namespace {

extern "C" void on_sigint(int) { treelab::request_interrupt(); }

struct Flags {
  std::string config;
  std::vector<int> trees, radii, n, direction;
  std::vector<double> p, beta, h, lambda, weights, offsets, fields;
  std::size_t replicas = 0, burn_in = 0, thinning = 0, chains = 0, batches = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out, format, kernel, suite;
  double alpha = 0, eps = 0, z = 0, tolerance = 0, bias_tolerance = 0, betac = 0;
  int m_ref = 0, r_max = 0;
};

// Options shared by every leaf command; only those given override the config.
void add_common(CLI::App* c, Flags& f) {
  c->add_option("--config", f.config, "JSON experiment spec")->check(CLI::ExistingFile);
  c->add_option("--trees", f.trees, "tree degrees, e.g. 3,3")->delimiter(',');
  c->add_option("--radii", f.radii, "ball radii per factor")->delimiter(',');
  c->add_option("--p", f.p, "bond probabilities")->delimiter(',');
  c->add_option("--beta", f.beta, "inverse temperatures")->delimiter(',');
  c->add_option("--h", f.h, "external fields")->delimiter(',');
  c->add_option("--lambda", f.lambda, "tilt exponents")->delimiter(',');
  c->add_option("--n", f.n, "distances or step counts")->delimiter(',');
  c->add_option("--replicas", f.replicas, "replica / sample budget");
  c->add_option("--seed", f.seed, "master seed");
  c->add_option("--threads", f.threads, "worker threads");
  c->add_option("--out", f.out, "output path (stdout when absent)");
  c->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  c->add_option("--kernel", f.kernel, "srw, weighted or lazy");
  c->add_option("--weights", f.weights, "per-factor step weights")->delimiter(',');
  c->add_option("--alpha", f.alpha, "laziness");
  c->add_option("--m-ref", f.m_ref, "reference step count for walk checks");
  c->add_option("--eps", f.eps, "p increment for open-cond");
  c->add_option("--direction", f.direction, "per-factor direction vector")->delimiter(',');
  c->add_option("--r-max", f.r_max, "largest r, l for supermult");
  c->add_option("--z", f.z, "standard errors allowed by CI-aware verdicts");
  c->add_option("--tolerance", f.tolerance, "bracket half-width for threshold searches");
  c->add_option("--bias-tolerance", f.bias_tolerance, "log-bias budget for the quenched check");
  c->add_option("--betac", f.betac, "critical beta for exponents (estimated when absent)");
  c->add_option("--offsets", f.offsets, "beta_c - beta values for exponents")->delimiter(',');
  c->add_option("--fields", f.fields, "h values for exponents")->delimiter(',');
  c->add_option("--burn-in", f.burn_in, "sweeps discarded per chain");
  c->add_option("--thinning", f.thinning, "sweeps between measurements");
  c->add_option("--chains", f.chains, "independent chains");
  c->add_option("--batches", f.batches, "batch means batches (total)");
  c->add_option("--suite", f.suite, "oracle suite");
}

template <class T>
void override_if(const CLI::App* c, const char* name, const T& value, T& field) {
  if (c->count(name) > 0) field = value;
}

treelab::ExperimentSpec build_spec(const CLI::App* c, const Flags& f, const std::string& command) {
  treelab::ExperimentSpec s;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw treelab::Error(treelab::ErrorKind::InvalidArgument, std::string("config: ") + e.what());
    }
    s = treelab::spec_from_json(j);
  }
  s.command = command;
  override_if(c, "--trees", f.trees, s.trees);
  override_if(c, "--radii", f.radii, s.radii);
  override_if(c, "--p", f.p, s.p);
  override_if(c, "--beta", f.beta, s.beta);
  override_if(c, "--h", f.h, s.h);
  override_if(c, "--lambda", f.lambda, s.lambda);
  override_if(c, "--n", f.n, s.n);
  override_if(c, "--replicas", f.replicas, s.replicas);
  override_if(c, "--seed", f.seed, s.seed);
  override_if(c, "--threads", f.threads, s.threads);
  override_if(c, "--out", f.out, s.out);
  override_if(c, "--format", f.format, s.format);
  override_if(c, "--kernel", f.kernel, s.kernel);
  override_if(c, "--weights", f.weights, s.weights);
  override_if(c, "--alpha", f.alpha, s.alpha);
  override_if(c, "--m-ref", f.m_ref, s.m_ref);
  override_if(c, "--eps", f.eps, s.eps);
  override_if(c, "--direction", f.direction, s.direction);
  override_if(c, "--r-max", f.r_max, s.r_max);
  override_if(c, "--z", f.z, s.z);
  override_if(c, "--tolerance", f.tolerance, s.tolerance);
  override_if(c, "--bias-tolerance", f.bias_tolerance, s.bias_tolerance);
  if (c->count("--betac") > 0) s.betac = f.betac;
  override_if(c, "--offsets", f.offsets, s.offsets);
  override_if(c, "--fields", f.fields, s.fields);
  override_if(c, "--burn-in", f.burn_in, s.burn_in);
  override_if(c, "--thinning", f.thinning, s.thinning);
  override_if(c, "--chains", f.chains, s.chains);
  override_if(c, "--batches", f.batches, s.batches);
  override_if(c, "--suite", f.suite, s.suite);
  return s;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw treelab::Error(treelab::ErrorKind::InvalidArgument, "cannot write " + path);
  o << text;
}

int execute(const treelab::ExperimentSpec& spec) {
  if (spec.command == "graph dump") {
    treelab::validate(spec);
    std::vector<int> radii = spec.radii.empty() ? std::vector<int>(spec.trees.size(), 2) : spec.radii;
    auto bs = treelab::make_ball_spec(spec.trees, radii);
    if (treelab::ball_vertex_count(bs) > bs.max_vertices)
      throw treelab::Error(treelab::ErrorKind::CapacityExceeded, "ball too large to dump");
    const treelab::ProductBall ball(bs);
    if (spec.out.empty()) {
      treelab::dump_graph(ball, std::cout);
    } else {
      std::ofstream o(spec.out, std::ios::binary);
      treelab::dump_graph(ball, o);
    }
    return 0;
  }
  const auto result = treelab::run(spec);
  const std::string body = spec.format == "json" ? treelab::to_json_text(result) : treelab::to_csv(result.table);
  if (spec.out.empty()) {
    std::cout << body;
  } else {
    // Interrupted runs never overwrite a complete artifact.
    const std::string path = result.partial ? spec.out + ".partial" : spec.out;
    write_text(path, body);
    if (spec.format == "csv") write_text(path + ".json", treelab::to_json_text(result));
  }
  if (result.partial) std::cerr << "interrupted: partial results written\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_sigint);
  CLI::App app{"treelab: percolation, Ising and random walks on products of regular trees"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);
  Flags flags;
  std::string command;
  CLI::App* leaf = nullptr;

  auto add_leaf = [&](CLI::App* parent, const std::string& name, const std::string& full, const std::string& help) {
    auto* c = parent->add_subcommand(name, help);
    add_common(c, flags);
    c->callback([&, c, full] {
      command = full;
      leaf = c;
    });
    return c;
  };

  add_leaf(&app, "constants", "constants", "bound constants for the given trees");
  add_leaf(&app, "oracle", "oracle", "Monte Carlo estimators against exact enumeration");

  auto* perc = app.add_subcommand("perc", "bond percolation")->require_subcommand(1);
  add_leaf(perc, "tau", "perc tau", "two-point function from the origin along --direction");
  add_leaf(perc, "chi", "perc chi", "expected cluster size");
  add_leaf(perc, "tilted", "perc tilted", "modular-tilted susceptibility");
  add_leaf(perc, "triangle", "perc triangle", "triangle diagram");
  add_leaf(perc, "pc", "perc pc", "finite-size threshold estimate");
  add_leaf(perc, "check-bound", "perc check-bound", "two-point bound at the given p");
  add_leaf(perc, "supermult", "perc supermult", "supermultiplicativity along geodesics");
  add_leaf(perc, "open-cond", "perc open-cond", "tilted susceptibility bound above p");

  auto* ising = app.add_subcommand("ising", "Ising model via Swendsen-Wang")->require_subcommand(1);
  add_leaf(ising, "twopoint", "ising twopoint", "spin correlations from the origin");
  add_leaf(ising, "bubble", "ising bubble", "bubble diagram");
  add_leaf(ising, "mag", "ising mag", "magnetization at h > 0");
  add_leaf(ising, "betac", "ising betac", "finite-size critical beta");
  add_leaf(ising, "exponents", "ising exponents", "log-log exponent fits");

  auto* walk = app.add_subcommand("walk", "random walk kernels")->require_subcommand(1);
  add_leaf(walk, "dist", "walk dist", "exact n-step distributions on the ball");
  add_leaf(walk, "rho", "walk rho", "spectral radius sequences");
  add_leaf(walk, "entropy", "walk entropy", "walk entropies");
  add_leaf(walk, "schramm", "walk schramm", "annealed walk/percolation check");
  add_leaf(walk, "schramm-quenched", "walk schramm-quenched", "quenched walk/percolation check");

  auto* graph = app.add_subcommand("graph", "graph utilities")->require_subcommand(1);
  add_leaf(graph, "dump", "graph dump", "edge list of the ball");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return execute(build_spec(leaf, flags, command));
  } catch (const treelab::Error& e) {
    std::cerr << "treelab: " << e.what() << "\n";
    return treelab::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "treelab: " << e.what() << "\n";
    return 1;
  }
}
