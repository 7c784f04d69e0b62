#include "treelab/ising.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "treelab/errors.hpp"
#include "treelab/exact_oracle.hpp"
#include "treelab/simd/kernels.hpp"

namespace treelab {

namespace {

thread_local std::vector<std::uint64_t> t_words;
thread_local std::vector<std::int8_t> t_color;

void require_no_field(const IsingParams& p) {
  if (p.h != 0.0) throw Error(ErrorKind::InvalidArgument, "this estimator is defined at h = 0");
}

std::size_t batches_per_chain(const IsingParams& p) {
  return std::max<std::size_t>(1, (p.batches + p.chains - 1) / p.chains);
}

EstimateWithCI pool(const std::vector<std::vector<double>>& chains, const IsingParams& p) {
  if (chains.empty()) throw Error(ErrorKind::InvalidArgument, "no completed chains");
  return pooled_batch_means(chains, batches_per_chain(p));
}

}  // namespace

void validate(const IsingParams& p) {
  if (!(p.beta >= 0.0) || !std::isfinite(p.beta)) throw Error(ErrorKind::InvalidArgument, "beta must be >= 0");
  if (!(p.h >= 0.0)) throw Error(ErrorKind::InvalidArgument, "h must be >= 0");
  if (p.thinning < 1) throw Error(ErrorKind::InvalidArgument, "thinning must be >= 1");
  if (p.chains < 1) throw Error(ErrorKind::InvalidArgument, "need at least one chain");
  if (p.batches < 1) throw Error(ErrorKind::InvalidArgument, "need at least one batch");
  if (p.samples < batches_per_chain(p))
    throw Error(ErrorKind::InvalidArgument, "each chain needs at least one sample per batch");
}

FKState make_fk_state(const Graph& g, Generator& gen) {
  FKState s;
  const std::size_t n = g.vertex_count();
  s.spin.resize(n);
  for (std::size_t v = 0; v < n; ++v) s.spin[v] = (gen() >> 63) ? 1 : -1;
  s.open_bits.assign((g.edge_count() + 63) / 64, 0);
  s.ghost_bits.assign((n + 63) / 64, 0);
  s.forest.reset(n + 1);
  s.ghost = static_cast<VertexId>(n);
  return s;
}

void sw_sweep(FKState& s, const Graph& g, double beta, double h, Generator& gen) {
  const std::size_t n = g.vertex_count();
  const std::size_t m = g.edge_count();
  const auto edges = g.edges();

  // Bond phase: draw a uniform word per edge, keep those below threshold
  // whose endpoints agree.
  const auto rule = BernoulliRule::for_probability(beta > 0.0 ? -std::expm1(-2.0 * beta) : 0.0);
  t_words.resize(std::max(m, n));
  std::span<std::uint64_t> words(t_words.data(), m);
  gen.fill(words);
  simd::bernoulli_mask(words, rule.threshold, rule.all, s.open_bits);
  for (std::size_t w = 0; w < s.open_bits.size(); ++w)
    for (std::uint64_t bits = s.open_bits[w]; bits != 0; bits &= bits - 1) {
      const auto b = static_cast<std::size_t>(std::countr_zero(bits));
      const auto& e = edges[w * 64 + b];
      if (s.spin[e.u] != s.spin[e.v]) s.open_bits[w] &= ~(std::uint64_t{1} << b);
    }

  std::fill(s.ghost_bits.begin(), s.ghost_bits.end(), 0);
  if (h > 0.0) {
    const auto grule = BernoulliRule::for_probability(-std::expm1(-2.0 * h));
    std::span<std::uint64_t> gw(t_words.data(), n);
    gen.fill(gw);
    simd::bernoulli_mask(gw, grule.threshold, grule.all, s.ghost_bits);
    for (std::size_t v = 0; v < n; ++v)
      if (s.spin[v] < 0) s.ghost_bits[v >> 6] &= ~(std::uint64_t{1} << (v & 63));
  }

  s.forest.reset(n + 1);
  for (std::size_t w = 0; w < s.open_bits.size(); ++w)
    for (std::uint64_t bits = s.open_bits[w]; bits != 0; bits &= bits - 1) {
      const auto& e = edges[w * 64 + static_cast<std::size_t>(std::countr_zero(bits))];
      s.forest.unite(e.u, e.v);
    }
  if (h > 0.0)
    for (std::size_t w = 0; w < s.ghost_bits.size(); ++w)
      for (std::uint64_t bits = s.ghost_bits[w]; bits != 0; bits &= bits - 1)
        s.forest.unite(static_cast<VertexId>(w * 64 + static_cast<std::size_t>(std::countr_zero(bits))), s.ghost);

  // Cluster recoloring.
  t_color.assign(n + 1, 0);
  t_color[s.forest.find(s.ghost)] = 1;
  std::uint64_t pool_bits = 0;
  int left = 0;
  for (std::size_t v = 0; v < n; ++v) {
    const auto r = s.forest.find(static_cast<VertexId>(v));
    if (t_color[r] == 0) {
      if (left == 0) {
        pool_bits = gen();
        left = 64;
      }
      t_color[r] = (pool_bits & 1u) ? 1 : -1;
      pool_bits >>= 1;
      --left;
    }
    s.spin[v] = t_color[r];
  }
  ++s.sweeps;
}

std::vector<std::vector<double>> run_fk_chains(const Graph& g, const IsingParams& params, const Execution& ex,
                                               const FKMeasure& measure, std::uint64_t tag) {
  validate(params);
  return run_replicas<std::vector<double>>(
      0, params.chains, ex.threads, [] { return 0; },
      [&](int&, std::size_t c) {
        Generator gen(ReplicaStream(ex.seed, c, tag));
        auto state = make_fk_state(g, gen);
        for (std::size_t i = 0; i < params.burn_in; ++i) sw_sweep(state, g, params.beta, params.h, gen);
        std::vector<double> out;
        out.reserve(params.samples);
        for (std::size_t s = 0; s < params.samples; ++s) {
          for (std::size_t t = 0; t < params.thinning; ++t) sw_sweep(state, g, params.beta, params.h, gen);
          out.push_back(measure(state));
        }
        return out;
      });
}

EstimateWithCI estimate_two_point(const Graph& g, VertexId x, VertexId y, const IsingParams& params,
                                  const Execution& ex) {
  require_no_field(params);
  if (x >= g.vertex_count() || y >= g.vertex_count()) throw Error(ErrorKind::IndexOutOfRange, "vertex id");
  auto est = pool(run_fk_chains(g, params, ex, [&](FKState& s) { return s.connected(x, y) ? 1.0 : 0.0; }), params);
  return est;
}

std::vector<EstimateWithCI> estimate_two_point_many(const Graph& g, VertexId x, std::span<const VertexId> targets,
                                                    const IsingParams& params, const Execution& ex) {
  require_no_field(params);
  validate(params);
  for (auto t : targets)
    if (t >= g.vertex_count() || x >= g.vertex_count()) throw Error(ErrorKind::IndexOutOfRange, "vertex id");
  const std::size_t k = targets.size();
  // [chain][target * samples + sample]
  const auto rows = run_replicas<std::vector<double>>(
      0, params.chains, ex.threads, [] { return 0; },
      [&](int&, std::size_t c) {
        Generator gen(ReplicaStream(ex.seed, c, tags::chain));
        auto state = make_fk_state(g, gen);
        for (std::size_t i = 0; i < params.burn_in; ++i) sw_sweep(state, g, params.beta, 0.0, gen);
        std::vector<double> out(k * params.samples);
        for (std::size_t s = 0; s < params.samples; ++s) {
          for (std::size_t t = 0; t < params.thinning; ++t) sw_sweep(state, g, params.beta, 0.0, gen);
          for (std::size_t j = 0; j < k; ++j) out[j * params.samples + s] = state.connected(x, targets[j]) ? 1.0 : 0.0;
        }
        return out;
      });
  std::vector<EstimateWithCI> est;
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<std::vector<double>> chains;
    for (const auto& r : rows)
      chains.emplace_back(r.begin() + static_cast<std::ptrdiff_t>(j * params.samples),
                          r.begin() + static_cast<std::ptrdiff_t>((j + 1) * params.samples));
    est.push_back(pool(chains, params));
  }
  return est;
}

EstimateWithCI estimate_susceptibility(const Graph& g, VertexId x, const IsingParams& params, const Execution& ex) {
  require_no_field(params);
  if (x >= g.vertex_count()) throw Error(ErrorKind::IndexOutOfRange, "vertex id");
  return pool(run_fk_chains(g, params, ex,
                            [&](FKState& s) { return static_cast<double>(s.forest.cluster_size(x)); }),
              params);
}

EstimateWithCI estimate_bubble(const Graph& g, VertexId x, const IsingParams& params, const Execution& ex) {
  require_no_field(params);
  validate(params);
  if (x >= g.vertex_count()) throw Error(ErrorKind::IndexOutOfRange, "vertex id");
  const std::size_t n = g.vertex_count();
  const auto chains = run_replicas<std::vector<double>>(
      0, params.chains, ex.threads, [] { return 0; },
      [&](int&, std::size_t c) {
        Generator g1(ReplicaStream(ex.seed, c, tags::chain));
        Generator g2(ReplicaStream(ex.seed, c, tags::chain_2));
        auto s1 = make_fk_state(g, g1);
        auto s2 = make_fk_state(g, g2);
        for (std::size_t i = 0; i < params.burn_in; ++i) {
          sw_sweep(s1, g, params.beta, 0.0, g1);
          sw_sweep(s2, g, params.beta, 0.0, g2);
        }
        std::vector<double> out;
        out.reserve(params.samples);
        for (std::size_t s = 0; s < params.samples; ++s) {
          for (std::size_t t = 0; t < params.thinning; ++t) {
            sw_sweep(s1, g, params.beta, 0.0, g1);
            sw_sweep(s2, g, params.beta, 0.0, g2);
          }
          const auto r1 = s1.forest.find(x), r2 = s2.forest.find(x);
          std::size_t both = 0;
          for (std::size_t v = 0; v < n; ++v)
            if (s1.forest.find(static_cast<VertexId>(v)) == r1 && s2.forest.find(static_cast<VertexId>(v)) == r2)
              ++both;
          out.push_back(static_cast<double>(both));
        }
        return out;
      });
  return pool(chains, params);
}

EstimateWithCI estimate_magnetization(const Graph& g, VertexId x, const IsingParams& params, const Execution& ex) {
  if (!(params.h > 0.0)) throw Error(ErrorKind::FieldRequired, "magnetization needs h > 0");
  if (x >= g.vertex_count()) throw Error(ErrorKind::IndexOutOfRange, "vertex id");
  return pool(run_fk_chains(g, params, ex, [&](FKState& s) { return s.connected(x, s.ghost) ? 1.0 : 0.0; }),
              params);
}

BetacEstimate estimate_betac(const ProductSpec& trees, const BetacProtocol& proto, const IsingParams& chain,
                             const Execution& ex) {
  if (proto.radii.size() != trees.size()) throw Error(ErrorKind::InvalidArgument, "ladder radii must match the trees");
  std::vector<ProductBall> balls;
  for (int step = 0; step <= 4; step += 2) {
    BallSpec spec;
    spec.trees = trees;
    for (auto r : proto.radii) spec.radii.push_back(r + step);
    balls.emplace_back(spec);
  }
  int ktot = 0;
  for (const auto& t : trees) ktot += t.degree();
  FlatnessProtocol fp;
  fp.lo = proto.lo >= 0.0 ? proto.lo : 0.5 / (ktot - 1);
  fp.hi = proto.hi >= 0.0 ? proto.hi : std::min(0.99, 1.5 / (ktot - 1));
  fp.replicas = proto.samples;
  fp.max_replicas = proto.max_samples;
  fp.tolerance = proto.tolerance;
  fp.z = proto.z;

  auto evaluate = [&](double t, std::size_t samples) {
    IsingParams p = chain;
    p.beta = std::atanh(t);
    p.h = 0.0;
    p.samples = std::max<std::size_t>(batches_per_chain(p), (samples + p.chains - 1) / p.chains);
    std::array<EstimateWithCI, 3> g;
    for (std::size_t j = 0; j < 3; ++j) {
      const auto& ball = balls[j];
      g[j] = pool(run_fk_chains(ball.graph(), p, ex,
                                [&](FKState& s) {
                                  const auto r = s.forest.find(ball.origin());
                                  std::size_t hits = 0;
                                  for (std::size_t v = 0; v < ball.vertex_count(); ++v)
                                    if (ball.is_boundary(static_cast<VertexId>(v)) &&
                                        s.forest.find(static_cast<VertexId>(v)) == r)
                                      ++hits;
                                  return static_cast<double>(hits);
                                }),
                  p);
    }
    if (!(g[0].mean > 0.0)) return std::pair{0.0, 0.0};
    const double ratio = g[2].mean / g[0].mean;
    const double rel = std::hypot(g[2].std_error / std::max(g[2].mean, 1e-300), g[0].std_error / g[0].mean);
    return std::pair{ratio, ratio * rel};
  };
  BetacEstimate out;
  out.search = bisect_flatness(fp, evaluate);
  out.tanh_lo = out.search.lo;
  out.tanh_hi = out.search.hi;
  const double blo = std::atanh(out.tanh_lo), bhi = std::atanh(out.tanh_hi);
  out.estimate = {0.5 * (blo + bhi), 0.5 * (bhi - blo),
                  out.search.steps.empty() ? 0 : out.search.steps.back().replicas, CiMethod::bracket};
  return out;
}

PowerLawFit fit_power_law(std::span<const double> distance, std::span<const EstimateWithCI> values) {
  if (distance.size() != values.size()) throw Error(ErrorKind::InvalidArgument, "fit grid and values differ in length");
  PowerLawFit f;
  f.distance.assign(distance.begin(), distance.end());
  f.values.assign(values.begin(), values.end());
  std::vector<double> x, y, sy;
  for (std::size_t i = 0; i < distance.size(); ++i) {
    if (!(distance[i] > 0.0)) throw Error(ErrorKind::InvalidArgument, "fit distances must be positive");
    if (!(values[i].mean > 0.0))
      throw Error(ErrorKind::InsufficientPrecision, "nonpositive estimate in a log-log fit");
    x.push_back(std::log(distance[i]));
    y.push_back(std::log(values[i].mean));
    sy.push_back(values[i].std_error / values[i].mean);
  }
  f.fit = fit_line(x, y, sy);
  return f;
}

PowerLawFit susceptibility_exponent(const Graph& g, VertexId x, double betac, std::span<const double> offsets,
                                    const IsingParams& params, const Execution& ex) {
  std::vector<EstimateWithCI> v;
  for (double e : offsets) {
    IsingParams p = params;
    p.beta = betac - e;
    p.h = 0.0;
    v.push_back(estimate_susceptibility(g, x, p, ex));
  }
  return fit_power_law(offsets, v);
}

PowerLawFit field_exponent(const Graph& g, VertexId x, double beta, std::span<const double> fields,
                           const IsingParams& params, const Execution& ex) {
  std::vector<EstimateWithCI> v;
  for (double h : fields) {
    IsingParams p = params;
    p.beta = beta;
    p.h = h;
    v.push_back(estimate_magnetization(g, x, p, ex));
  }
  return fit_power_law(fields, v);
}

PowerLawFit spontaneous_exponent(const Graph& g, VertexId x, double betac, std::span<const double> offsets, double h,
                                 const IsingParams& params, const Execution& ex) {
  std::vector<EstimateWithCI> v;
  for (double t : offsets) {
    IsingParams p = params;
    p.beta = betac + t;
    p.h = h;
    v.push_back(estimate_magnetization(g, x, p, ex));
  }
  return fit_power_law(offsets, v);
}

PowerLawFit tree_susceptibility_exponent(int k, std::span<const double> offsets) {
  const double bc = tree_betac(k);
  std::vector<EstimateWithCI> v;
  for (double e : offsets) v.push_back(exact_estimate(tree_ising_susceptibility(k, bc - e)));
  return fit_power_law(offsets, v);
}

}  // namespace treelab
