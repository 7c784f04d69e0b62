#include "treelab/walk.hpp"

#include <algorithm>
#include <cmath>

#include "treelab/errors.hpp"
#include "treelab/simd/kernels.hpp"

namespace treelab {

namespace {

void require_radius(const ProductBall& ball, int n) {
  for (std::size_t i = 0; i < ball.factors(); ++i)
    if (ball.factor(i).radius < n)
      throw Error(ErrorKind::RadiusTooSmall, "factor " + std::to_string(i) + " radius " +
                                                 std::to_string(ball.factor(i).radius) + " < " + std::to_string(n));
}

void require_steps(int n) {
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "step count must be nonnegative");
}

// Factor in which each ball edge moves.
std::vector<std::uint8_t> edge_factors(const ProductBall& ball) {
  const auto edges = ball.graph().edges();
  std::vector<std::uint8_t> f(edges.size(), 0);
  for (std::size_t e = 0; e < edges.size(); ++e)
    for (std::size_t i = 0; i < ball.factors(); ++i)
      if (ball.local_index(edges[e].u, i) != ball.local_index(edges[e].v, i)) {
        f[e] = static_cast<std::uint8_t>(i);
        break;
      }
  return f;
}

double log_sphere(const TreeSpec& t, int d) {
  if (d == 0) return 0.0;
  return std::log(static_cast<double>(t.degree())) + (d - 1) * std::log(static_cast<double>(t.arity()));
}

}  // namespace

std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::srw: return "srw";
    case KernelKind::weighted: return "weighted";
    case KernelKind::lazy: return "lazy";
  }
  return "?";
}

KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "srw") return KernelKind::srw;
  if (s == "weighted") return KernelKind::weighted;
  if (s == "lazy") return KernelKind::lazy;
  throw Error(ErrorKind::InvalidArgument, "unknown kernel '" + s + "' (srw, weighted, lazy)");
}

KernelSpec resolve_kernel(const KernelSpec& kernel, const ProductSpec& trees) {
  if (trees.empty()) throw Error(ErrorKind::InvalidArgument, "no factors");
  KernelSpec k = kernel;
  if (k.kind == KernelKind::srw && (!k.weights.empty() || k.laziness != 0.0))
    throw Error(ErrorKind::InvalidArgument, "srw takes no weights or laziness");
  if (k.kind == KernelKind::weighted && k.laziness != 0.0)
    throw Error(ErrorKind::InvalidArgument, "weighted kernel is not lazy; use kind lazy");
  if (!(k.laziness >= 0.0 && k.laziness < 1.0)) throw Error(ErrorKind::InvalidArgument, "laziness must lie in [0,1)");
  if (k.weights.empty()) {
    double total = 0.0;
    for (const auto& t : trees) total += t.degree();
    for (const auto& t : trees) k.weights.push_back(t.degree() / total);
  }
  if (k.weights.size() != trees.size()) throw Error(ErrorKind::InvalidArgument, "one weight per factor");
  double sum = 0.0;
  for (double w : k.weights) {
    if (!(w >= 0.0)) throw Error(ErrorKind::InvalidArgument, "weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw Error(ErrorKind::InvalidArgument, "weights must sum to 1");
  return k;
}

double spectral_radius_target(const ProductSpec& trees, const KernelSpec& kernel) {
  const auto k = resolve_kernel(kernel, trees);
  double s = 0.0;
  for (std::size_t i = 0; i < trees.size(); ++i)
    s += k.weights[i] * 2.0 * std::sqrt(static_cast<double>(trees[i].arity())) / trees[i].degree();
  return k.laziness + (1.0 - k.laziness) * s;
}

double KernelDistribution::mass() const { return ordered_sum(prob); }

double KernelDistribution::sup() const {
  double m = 0.0;
  for (double q : prob) m = std::max(m, q);
  return m;
}

double KernelDistribution::entropy() const {
  std::vector<double> t;
  t.reserve(prob.size());
  for (double q : prob)
    if (q > 0.0) t.push_back(-q * std::log(q));
  return ordered_sum(t);
}

double KernelDistribution::at(VertexId v) const {
  auto it = std::lower_bound(support.begin(), support.end(), v);
  return (it != support.end() && *it == v) ? prob[static_cast<std::size_t>(it - support.begin())] : 0.0;
}

KernelDistribution exact_distribution(const ProductBall& ball, const KernelSpec& kernel, int n) {
  require_steps(n);
  require_radius(ball, n);
  const auto k = resolve_kernel(kernel, ball.spec().trees);
  const auto factor_of = edge_factors(ball);
  std::vector<double> move(ball.factors());
  for (std::size_t i = 0; i < move.size(); ++i) move[i] = (1.0 - k.laziness) * k.weights[i] / ball.factor(i).tree.degree();

  const std::size_t nv = ball.vertex_count();
  std::vector<double> cur(nv, 0.0), next(nv, 0.0);
  std::vector<std::uint8_t> seen(nv, 0);
  std::vector<VertexId> active{ball.origin()}, grown;
  cur[ball.origin()] = 1.0;
  seen[ball.origin()] = 1;
  const auto& g = ball.graph();
  for (int t = 0; t < n; ++t) {
    grown = active;
    for (auto v : active) {
      for (const auto& inc : g.incident(v))
        if (!seen[inc.to]) {
          seen[inc.to] = 1;
          grown.push_back(inc.to);
        }
    }
    std::sort(grown.begin(), grown.end());
    // Gather form: each target sums its sources in incidence order.
    for (auto v : grown) {
      double acc = k.laziness * cur[v];
      for (const auto& inc : g.incident(v)) acc += move[factor_of[inc.edge]] * cur[inc.to];
      next[v] = acc;
    }
    for (auto v : grown) cur[v] = next[v];
    active.swap(grown);
  }
  KernelDistribution out;
  out.steps = n;
  for (auto v : active)
    if (cur[v] > 0.0) {
      out.support.push_back(v);
      out.prob.push_back(cur[v]);
    }
  return out;
}

DistanceLaw::DistanceLaw(const ProductSpec& trees, const KernelSpec& kernel, int max_steps)
    : trees_(trees), kernel_(resolve_kernel(kernel, trees)), max_steps_(max_steps) {
  require_steps(max_steps);
  const std::size_t side = static_cast<std::size_t>(max_steps) + 1;
  const std::size_t nf = trees_.size();
  strides_.assign(nf, 1);
  std::size_t cells = 1;
  for (std::size_t i = nf; i-- > 0;) {
    strides_[i] = cells;
    if (cells > (std::size_t{1} << 26) / side) throw Error(ErrorKind::TooLarge, "distance grid too large");
    cells *= side;
  }
  law_.assign(cells, 0.0);
  next_.assign(cells, 0.0);
  law_[0] = 1.0;
  log_sphere_.assign(cells, 0.0);
  inv_sphere_.assign(cells, 0.0);
  for (std::size_t c = 0; c < cells; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < nf; ++i)
      s += log_sphere(trees_[i], static_cast<int>((c / strides_[i]) % side));
    log_sphere_[c] = s;
    inv_sphere_[c] = std::exp(-s);
  }
}

std::vector<int> DistanceLaw::class_of(std::size_t cell) const {
  const std::size_t side = static_cast<std::size_t>(max_steps_) + 1;
  std::vector<int> d(trees_.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<int>((cell / strides_[i]) % side);
  return d;
}

double DistanceLaw::prob(std::span<const int> d) const {
  if (d.size() != trees_.size()) throw Error(ErrorKind::InvalidArgument, "distance vector length");
  std::size_t c = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] < 0 || d[i] > max_steps_) return 0.0;
    c += static_cast<std::size_t>(d[i]) * strides_[i];
  }
  return law_[c];
}

// One step of the lumped chain. In factor i the distance moves 0 -> 1 surely
// and d -> d + 1, d - 1 with probabilities (k - 1)/k, 1/k. Mass never reaches
// the top of the grid because d_i <= steps <= max_steps.
void DistanceLaw::step() {
  if (steps_ >= max_steps_) throw Error(ErrorKind::CapacityExceeded, "distance law built for fewer steps");
  const std::size_t L = static_cast<std::size_t>(max_steps_) + 1;
  const std::size_t cells = law_.size();
  simd::scale(next_, kernel_.laziness, law_);
  for (std::size_t i = 0; i < trees_.size(); ++i) {
    const double c = (1.0 - kernel_.laziness) * kernel_.weights[i];
    if (c == 0.0) continue;
    const double k = trees_[i].degree();
    const double up = c * (k - 1.0) / k, up0 = c, down = c / k;
    const std::size_t s = strides_[i], block = L * s;
    for (std::size_t base = 0; base < cells; base += block) {
      double* dst = next_.data() + base;
      const double* src = law_.data() + base;
      if (L >= 2)
        for (std::size_t t = 0; t < s; ++t) dst[t] += down * src[s + t];
      if (L >= 3) {
        for (std::size_t t = 0; t < s; ++t) dst[s + t] += up0 * src[t] + down * src[2 * s + t];
      } else if (L == 2) {
        for (std::size_t t = 0; t < s; ++t) dst[s + t] += up0 * src[t];
      }
      if (L >= 4)
        simd::axpy2({dst + 2 * s, (L - 3) * s}, up, {src + s, (L - 3) * s}, down, {src + 3 * s, (L - 3) * s});
      if (L >= 3)
        for (std::size_t t = 0; t < s; ++t) dst[(L - 1) * s + t] += up * src[(L - 2) * s + t];
    }
  }
  law_.swap(next_);
  ++steps_;
}

double DistanceLaw::mass() const { return simd::lane_sum(law_); }

double DistanceLaw::sup_point_probability() const { return simd::max_product(law_, inv_sphere_); }

double DistanceLaw::entropy() const {
  std::vector<double> t(law_.size(), 0.0);
  for (std::size_t c = 0; c < law_.size(); ++c)
    if (law_[c] > 0.0) t[c] = -law_[c] * (std::log(law_[c]) - log_sphere_[c]);
  return simd::lane_sum(t);
}

SpectralBounds spectral_radius_bounds(const ProductSpec& trees, const KernelSpec& kernel, int n_max) {
  if (n_max < 1) throw Error(ErrorKind::InvalidArgument, "n_max must be at least 1");
  SpectralBounds b;
  b.target = spectral_radius_target(trees, kernel);
  DistanceLaw law(trees, kernel, 2 * n_max);
  for (int t = 1; t <= 2 * n_max; ++t) {
    law.step();
    if (t <= n_max) {
      const double s = law.sup_point_probability();
      b.sup_value.push_back(s);
      b.sup_root.push_back(std::pow(s, 1.0 / t));
    }
    if (t % 2 == 0) b.return_root.push_back(std::pow(law.return_probability(), 1.0 / t));
  }
  return b;
}

SpectralBounds spectral_radius_bounds(const ProductBall& ball, const KernelSpec& kernel, int n_max) {
  require_radius(ball, n_max);
  return spectral_radius_bounds(ball.spec().trees, kernel, n_max);
}

std::vector<double> entropy_sequence(const ProductSpec& trees, const KernelSpec& kernel, int n_max) {
  require_steps(n_max);
  DistanceLaw law(trees, kernel, n_max);
  std::vector<double> h{0.0};
  for (int t = 1; t <= n_max; ++t) {
    law.step();
    h.push_back(law.entropy());
  }
  return h;
}

std::vector<double> entropy_sequence(const ProductBall& ball, const KernelSpec& kernel, int n_max) {
  require_radius(ball, n_max);
  return entropy_sequence(ball.spec().trees, kernel, n_max);
}

WalkSampler::WalkSampler(const ProductBall& ball, const KernelSpec& kernel)
    : ball_(&ball), kernel_(resolve_kernel(kernel, ball.spec().trees)), edge_factor_(edge_factors(ball)) {}

VertexId WalkSampler::sample(int n, Generator& gen) const {
  require_steps(n);
  require_radius(*ball_, n);
  const auto& g = ball_->graph();
  VertexId v = ball_->origin();
  for (int t = 0; t < n; ++t) {
    if (kernel_.laziness > 0.0 && gen.uniform() < kernel_.laziness) continue;
    const double u = gen.uniform();
    std::size_t f = 0;
    double acc = kernel_.weights[0];
    while (f + 1 < kernel_.weights.size() && (u >= acc || kernel_.weights[f] == 0.0)) acc += kernel_.weights[++f];
    auto pick = gen.below(static_cast<std::uint64_t>(ball_->factor(f).tree.degree()));
    for (const auto& inc : g.incident(v)) {
      if (edge_factor_[inc.edge] != f) continue;
      if (pick-- == 0) {
        v = inc.to;
        break;
      }
    }
  }
  return v;
}

SchrammAnnealedReport schramm_annealed_check(const ProductBall& ball, const KernelSpec& kernel, double p, int n,
                                             int m_ref, std::size_t replicas, const Execution& ex, double z) {
  require_steps(n);
  require_radius(ball, n);
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::InvalidArgument, "p must lie in [0,1]");
  if (m_ref < 1) throw Error(ErrorKind::InvalidArgument, "m_ref must be at least 1");
  if (replicas == 0) throw Error(ErrorKind::InvalidArgument, "replica count must be positive");
  const auto& trees = ball.spec().trees;
  SchrammAnnealedReport rep;
  rep.n = n;
  rep.m_ref = m_ref;
  rep.p = p;

  DistanceLaw ref(trees, kernel, m_ref);
  for (int t = 0; t < m_ref; ++t) ref.step();
  rep.strict_reference = std::exp(n * std::log(ref.sup_point_probability()) / m_ref);
  rep.rho_reference = std::pow(spectral_radius_target(trees, kernel), n);

  const WalkSampler sampler(ball, kernel);
  const auto rule = BernoulliRule::for_probability(p);
  const auto hits = run_replicas<std::uint8_t>(
      0, replicas, ex.threads, [&] { return ClusterExplorer(ball.graph()); },
      [&](ClusterExplorer& e, std::size_t r) -> std::uint8_t {
        Generator gen(ReplicaStream(ex.seed, r, tags::walk));
        const VertexId y = sampler.sample(n, gen);
        return e.explore(ball.origin(), ReplicaStream(ex.seed, r, tags::percolation), rule, nullptr, y) ? 1 : 0;
      });
  std::size_t s = 0;
  for (auto h : hits) s += h;
  rep.expectation = wilson_estimate(s, hits.size());
  rep.strict_holds = rep.expectation.below_bound(rep.strict_reference, z);
  rep.rho_holds = rep.expectation.below_bound(rep.rho_reference, z);

  if (trees.size() == 1) {
    DistanceLaw law(trees, kernel, n);
    for (int t = 0; t < n; ++t) law.step();
    std::vector<double> terms;
    for (int d = 0; d <= n; ++d) {
      const int dv[1] = {d};
      terms.push_back(law.prob(dv) * std::pow(p, d));
    }
    rep.has_exact = true;
    rep.exact = ordered_sum(terms);
    rep.exact_agrees = rep.expectation.contains(rep.exact, z);
  }
  return rep;
}

SchrammQuenchedReport schramm_quenched_check(const ProductBall& ball, const KernelSpec& kernel, double p, int n,
                                             int m_ref, std::size_t replicas, const Execution& ex,
                                             double bias_tolerance, double z) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be at least 1");
  require_radius(ball, n);
  if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorKind::InvalidArgument, "p must lie in (0,1]");
  if (m_ref < 1) throw Error(ErrorKind::InvalidArgument, "m_ref must be at least 1");
  if (replicas < 2) throw Error(ErrorKind::InvalidArgument, "need at least two replicas");
  const auto& trees = ball.spec().trees;
  SchrammQuenchedReport rep;
  rep.n = n;
  rep.m_ref = m_ref;
  rep.p = p;
  rep.bias_tolerance = bias_tolerance;

  DistanceLaw law(trees, kernel, n);
  for (int t = 0; t < n; ++t) law.step();
  std::vector<std::vector<int>> classes;
  std::vector<double> weight;
  for (std::size_t c = 0; c < law.law().size(); ++c)
    if (law.law()[c] > 0.0) {
      classes.push_back(law.class_of(c));
      weight.push_back(law.law()[c]);
    }

  auto est = estimate_tau_classes(ball, p, classes, replicas, ex, tags::percolation);
  const std::size_t nr = est.samples.empty() ? 0 : est.samples[0].size();
  if (nr < 2) throw Error(ErrorKind::InsufficientPrecision, "too few completed replicas");
  std::vector<double> logs, bias;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto& t = est.classes[c].tau;
    if (!(t.mean > 0.0))
      throw Error(ErrorKind::InsufficientPrecision, "no connection observed for a distance class; raise replicas");
    logs.push_back(weight[c] * std::log(t.mean));
    const double rel = t.std_error / t.mean;
    bias.push_back(weight[c] * rel * rel / 2.0);
  }
  std::vector<double> zr(nr);
  std::vector<double> terms(classes.size());
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t c = 0; c < classes.size(); ++c) terms[c] = weight[c] * est.samples[c][r] / est.classes[c].tau.mean;
    zr[r] = ordered_sum(terms) / n;
  }
  rep.mean_log_tau = normal_estimate(zr);
  rep.mean_log_tau.mean = ordered_sum(logs) / n;
  rep.log_bias = ordered_sum(bias) / n;
  rep.classes = std::move(est.classes);
  if (rep.log_bias > bias_tolerance)
    throw Error(ErrorKind::InsufficientPrecision, "log-bias bound " + std::to_string(rep.log_bias) +
                                                      " exceeds tolerance " + std::to_string(bias_tolerance));

  DistanceLaw ref(trees, kernel, m_ref);
  for (int t = 0; t < m_ref; ++t) ref.step();
  rep.reference = -ref.entropy() / m_ref;
  rep.holds = rep.mean_log_tau.below_bound(rep.reference, z);

  if (trees.size() == 1) {
    std::vector<double> d_terms;
    for (int d = 0; d <= n; ++d) {
      const int dv[1] = {d};
      d_terms.push_back(law.prob(dv) * d);
    }
    rep.has_exact = true;
    rep.exact = std::log(p) * ordered_sum(d_terms) / n;
    rep.exact_agrees = rep.mean_log_tau.contains(rep.exact, z);
  }
  return rep;
}

}  // namespace treelab
