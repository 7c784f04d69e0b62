#include "treelab/percolation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

#include "treelab/errors.hpp"
#include "treelab/simd/kernels.hpp"

namespace treelab {

namespace {

void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::InvalidArgument, "p must lie in [0,1]");
}

void check_vertex(const Graph& g, VertexId v) {
  if (v >= g.vertex_count()) throw Error(ErrorKind::IndexOutOfRange, "vertex id " + std::to_string(v));
}

void check_replicas(std::size_t n) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "replica count must be positive");
}

ReplicaStream stream_for(const Execution& ex, std::size_t replica, std::uint64_t tag) {
  return ReplicaStream(ex.seed, replica, tag);
}

std::vector<double> as_doubles(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

EstimateWithCI wilson_from(const std::vector<std::uint8_t>& hits) {
  std::size_t s = 0;
  for (auto h : hits) s += h;
  return wilson_estimate(s, hits.size());
}

}  // namespace

std::size_t PercConfig::open_count() const noexcept {
  std::size_t c = 0;
  for (auto w : open_bits) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

PercConfig sample_config(const Graph& g, double p, const ReplicaStream& stream) {
  check_probability(p);
  PercConfig c;
  c.p = p;
  c.master = stream.master();
  c.replica = stream.replica();
  c.tag = stream.tag();
  std::vector<std::uint64_t> words(g.edge_count());
  const auto keys = g.edge_keys();
  for (std::size_t e = 0; e < words.size(); ++e) words[e] = stream.keyed_word(keys[e]);
  const auto rule = BernoulliRule::for_probability(p);
  c.open_bits.assign((words.size() + 63) / 64, 0);
  simd::bernoulli_mask(words, rule.threshold, rule.all, c.open_bits);
  return c;
}

ClusterForest::ClusterForest(std::size_t n) { reset(n); }

void ClusterForest::reset(std::size_t n) {
  parent_.resize(n);
  for (std::size_t v = 0; v < n; ++v) parent_[v] = static_cast<VertexId>(v);
  rank_.assign(n, 0);
  size_.assign(n, 1);
  clusters_ = n;
}

VertexId ClusterForest::find(VertexId v) noexcept {
  while (parent_[v] != v) {
    parent_[v] = parent_[parent_[v]];
    v = parent_[v];
  }
  return v;
}

bool ClusterForest::unite(VertexId a, VertexId b) noexcept {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (rank_[a] < rank_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  if (rank_[a] == rank_[b]) ++rank_[a];
  --clusters_;
  return true;
}

ClusterForest build_clusters(const Graph& g, const PercConfig& config) {
  if (config.open_bits.size() * 64 < g.edge_count())
    throw Error(ErrorKind::InvalidArgument, "configuration does not match the graph");
  ClusterForest f(g.vertex_count());
  const auto edges = g.edges();
  for (std::size_t w = 0; w < config.open_bits.size(); ++w)
    for (std::uint64_t bits = config.open_bits[w]; bits != 0; bits &= bits - 1) {
      const auto e = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
      f.unite(edges[e].u, edges[e].v);
    }
  return f;
}

ClusterExplorer::ClusterExplorer(const Graph& g) : g_(&g), stamp_(g.vertex_count(), 0) {
  queue_.reserve(256);
}

bool ClusterExplorer::explore(VertexId source, const ReplicaStream& stream, BernoulliRule rule,
                              const std::uint8_t* allowed, VertexId target) {
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }
  queue_.clear();
  stamp_[source] = epoch_;
  queue_.push_back(source);
  if (source == target) return true;
  for (std::size_t head = 0; head < queue_.size(); ++head) {
    for (const auto& inc : g_->incident(queue_[head])) {
      if (stamp_[inc.to] == epoch_) continue;
      if (allowed && !allowed[inc.to]) continue;
      if (!rule(stream.keyed_word(g_->edge_key(inc.edge)))) continue;
      stamp_[inc.to] = epoch_;
      queue_.push_back(inc.to);
      if (inc.to == target) return true;
    }
  }
  return false;
}

EstimateWithCI estimate_tau(const Graph& g, double p, VertexId x, VertexId y, std::size_t n, const Execution& ex,
                            const std::uint8_t* allowed) {
  check_probability(p);
  check_vertex(g, x);
  check_vertex(g, y);
  check_replicas(n);
  if (x == y) return {1.0, 0.0, n, CiMethod::wilson};
  if (p == 0.0) return {0.0, 0.0, n, CiMethod::wilson};
  const auto rule = BernoulliRule::for_probability(p);
  const auto hits = run_replicas<std::uint8_t>(
      0, n, ex.threads, [&] { return ClusterExplorer(g); },
      [&](ClusterExplorer& e, std::size_t r) {
        return static_cast<std::uint8_t>(e.explore(x, stream_for(ex, r, tags::percolation), rule, allowed, y));
      });
  return wilson_from(hits);
}

std::vector<EstimateWithCI> estimate_tau_many(const Graph& g, double p, VertexId source,
                                              std::span<const VertexId> targets, std::size_t n, const Execution& ex,
                                              const std::uint8_t* allowed) {
  check_probability(p);
  check_vertex(g, source);
  for (auto t : targets) check_vertex(g, t);
  check_replicas(n);
  const auto rule = BernoulliRule::for_probability(p);
  const auto rows = run_replicas<std::vector<std::uint8_t>>(
      0, n, ex.threads, [&] { return ClusterExplorer(g); },
      [&](ClusterExplorer& e, std::size_t r) {
        e.explore(source, stream_for(ex, r, tags::percolation), rule, allowed);
        std::vector<std::uint8_t> hit(targets.size());
        for (std::size_t j = 0; j < targets.size(); ++j) hit[j] = e.contains(targets[j]) ? 1 : 0;
        return hit;
      });
  std::vector<EstimateWithCI> out;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    std::size_t s = 0;
    for (const auto& row : rows) s += row[j];
    out.push_back(wilson_estimate(s, rows.size()));
  }
  return out;
}

EstimateWithCI estimate_chi(const Graph& g, double p, VertexId x, std::size_t n, const Execution& ex,
                            const std::uint8_t* allowed) {
  check_probability(p);
  check_vertex(g, x);
  check_replicas(n);
  if (p == 0.0) return {1.0, 0.0, n, CiMethod::normal};
  const auto rule = BernoulliRule::for_probability(p);
  const auto sizes = run_replicas<std::size_t>(
      0, n, ex.threads, [&] { return ClusterExplorer(g); },
      [&](ClusterExplorer& e, std::size_t r) {
        e.explore(x, stream_for(ex, r, tags::percolation), rule, allowed);
        return e.members().size();
      });
  return normal_estimate(as_doubles(sizes));
}

EstimateWithCI estimate_tilted_chi(const Graph& g, std::span<const double> log_weight, double p, double lambda,
                                   VertexId x, std::size_t n, const Execution& ex, const std::uint8_t* allowed) {
  check_probability(p);
  check_vertex(g, x);
  check_replicas(n);
  if (log_weight.size() != g.vertex_count()) throw Error(ErrorKind::InvalidArgument, "log weight count");
  if (p == 0.0) return {1.0, 0.0, n, CiMethod::normal};
  std::vector<double> w(g.vertex_count());
  for (std::size_t v = 0; v < w.size(); ++v) w[v] = std::exp(lambda * (log_weight[v] - log_weight[x]));
  const auto rule = BernoulliRule::for_probability(p);
  const auto sums = run_replicas<double>(
      0, n, ex.threads,
      [&] { return std::pair{ClusterExplorer(g), std::vector<double>()}; },
      [&](auto& state, std::size_t r) {
        auto& [e, terms] = state;
        e.explore(x, stream_for(ex, r, tags::percolation), rule, allowed);
        terms.clear();
        for (auto v : e.members()) terms.push_back(w[v]);
        return ordered_sum(terms);
      });
  return normal_estimate(sums);
}

EstimateWithCI estimate_tilted_chi(const ProductBall& ball, double p, double lambda, std::size_t n,
                                   const Execution& ex, const std::uint8_t* allowed) {
  std::vector<double> lw(ball.vertex_count());
  for (std::size_t v = 0; v < lw.size(); ++v) lw[v] = ball.log_modular_from_origin(static_cast<VertexId>(v));
  return estimate_tilted_chi(ball.graph(), lw, p, lambda, ball.origin(), n, ex, allowed);
}

namespace {

// Per-worker scratch for the triangle statistic.
struct TriangleState {
  explicit TriangleState(const Graph& g) : c1(g), c3(g), label(g.vertex_count(), 0), stamp(g.vertex_count(), 0) {}

  ClusterExplorer c1;
  ClusterExplorer c3;
  std::vector<std::uint32_t> label;
  std::vector<std::uint32_t> stamp;
  std::uint32_t epoch = 0;
  std::vector<std::size_t> hits;  // per omega_2 cluster: members inside C3
  std::vector<VertexId> queue;
};

}  // namespace

EstimateWithCI estimate_triangle(const Graph& g, double p, VertexId x, std::size_t n, const Execution& ex,
                                 const std::uint8_t* allowed) {
  check_probability(p);
  check_vertex(g, x);
  check_replicas(n);
  if (p == 0.0) return {1.0, 0.0, n, CiMethod::normal};
  const auto rule = BernoulliRule::for_probability(p);
  const auto stats = run_replicas<double>(
      0, n, ex.threads, [&] { return TriangleState(g); },
      [&](TriangleState& s, std::size_t r) {
        const auto s1 = stream_for(ex, r, tags::percolation);
        const auto s2 = stream_for(ex, r, tags::percolation_2);
        const auto s3 = stream_for(ex, r, tags::percolation_3);
        s.c1.explore(x, s1, rule, allowed);
        s.c3.explore(x, s3, rule, allowed);
        if (++s.epoch == 0) {
          std::fill(s.stamp.begin(), s.stamp.end(), 0);
          s.epoch = 1;
        }
        s.hits.clear();
        std::size_t total = 0;
        for (auto u : s.c1.members()) {
          if (s.stamp[u] != s.epoch) {
            // Label the omega_2 cluster of u and count its members in C3.
            const auto id = static_cast<std::uint32_t>(s.hits.size());
            std::size_t inside = 0;
            s.queue.assign(1, u);
            s.stamp[u] = s.epoch;
            s.label[u] = id;
            for (std::size_t h = 0; h < s.queue.size(); ++h) {
              const auto v = s.queue[h];
              if (s.c3.contains(v)) ++inside;
              for (const auto& inc : g.incident(v)) {
                if (s.stamp[inc.to] == s.epoch) continue;
                if (allowed && !allowed[inc.to]) continue;
                if (!rule(s2.keyed_word(g.edge_key(inc.edge)))) continue;
                s.stamp[inc.to] = s.epoch;
                s.label[inc.to] = id;
                s.queue.push_back(inc.to);
              }
            }
            s.hits.push_back(inside);
          }
          total += s.hits[s.label[u]];
        }
        return static_cast<double>(total);
      });
  return normal_estimate(stats);
}

ClassTauSamples estimate_tau_classes(const ProductBall& ball, double p, std::span<const std::vector<int>> classes,
                                     std::size_t n, const Execution& ex, std::uint64_t tag) {
  check_probability(p);
  check_replicas(n);
  const std::size_t nf = ball.factors();
  std::map<std::vector<int>, std::size_t> lookup;
  ClassTauSamples out;
  for (const auto& d : classes) {
    if (d.size() != nf) throw Error(ErrorKind::InvalidArgument, "distance vector length");
    for (std::size_t i = 0; i < nf; ++i)
      if (d[i] < 0 || d[i] > ball.factor(i).radius)
        throw Error(ErrorKind::RadiusTooSmall, "distance class outside the ball");
    if (lookup.emplace(d, out.classes.size()).second) out.classes.push_back({d, 0, {}});
  }
  std::vector<std::int32_t> class_of(ball.vertex_count(), -1);
  std::vector<int> d(nf);
  for (std::size_t v = 0; v < class_of.size(); ++v) {
    for (std::size_t i = 0; i < nf; ++i) d[i] = ball.depth(static_cast<VertexId>(v), i);
    if (auto it = lookup.find(d); it != lookup.end()) {
      class_of[v] = static_cast<std::int32_t>(it->second);
      ++out.classes[it->second].sphere_size;
    }
  }
  const auto rule = BernoulliRule::for_probability(p);
  const std::size_t nc = out.classes.size();
  const auto rows = run_replicas<std::vector<double>>(
      0, n, ex.threads, [&] { return ClusterExplorer(ball.graph()); },
      [&](ClusterExplorer& e, std::size_t r) {
        e.explore(ball.origin(), stream_for(ex, r, tag), rule);
        std::vector<double> frac(nc, 0.0);
        for (auto v : e.members())
          if (class_of[v] >= 0) frac[static_cast<std::size_t>(class_of[v])] += 1.0;
        for (std::size_t c = 0; c < nc; ++c) frac[c] /= static_cast<double>(out.classes[c].sphere_size);
        return frac;
      });
  out.samples.assign(nc, std::vector<double>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < nc; ++c) out.samples[c][r] = rows[r][c];
  for (std::size_t c = 0; c < nc; ++c) out.classes[c].tau = normal_estimate(out.samples[c]);
  return out;
}

RadiusShift with_radius_shift(const ProductBall& outer_ball, std::span<const int> inner_radii,
                              const std::function<EstimateWithCI(const std::uint8_t*)>& estimator) {
  const auto mask = outer_ball.inside_mask(inner_radii);
  RadiusShift s;
  s.inner = estimator(mask.data());
  s.outer = estimator(nullptr);
  s.relative_shift = s.inner.mean != 0.0 ? s.outer.mean / s.inner.mean - 1.0 : 0.0;
  return s;
}

namespace {

VertexId descend_vertex(const ProductBall& ball, std::span<const int> depth, std::uint8_t letter) {
  ProductVertex v;
  for (std::size_t i = 0; i < ball.factors(); ++i) {
    const auto& t = ball.factor(i).tree;
    std::vector<std::uint8_t> w(static_cast<std::size_t>(depth[i]), letter);
    v.coords.push_back(canonical_vertex(t, 0, w));
  }
  return ball.index(v);
}

}  // namespace

SupermultRow check_supermultiplicativity(const ProductBall& ball, double p, std::span<const int> direction, int r,
                                         int l, std::size_t n, const Execution& ex, double z) {
  check_probability(p);
  if (direction.size() != ball.factors()) throw Error(ErrorKind::InvalidArgument, "direction vector length");
  if (r < 0 || l < 0) throw Error(ErrorKind::InvalidArgument, "r and l must be nonnegative");
  std::vector<int> far(direction.size()), mid(direction.size());
  for (std::size_t i = 0; i < direction.size(); ++i) {
    if (direction[i] < 0) throw Error(ErrorKind::InvalidArgument, "direction entries must be nonnegative");
    far[i] = (r + l) * direction[i];
    mid[i] = r * direction[i];
    if (far[i] > ball.factor(i).radius)
      throw Error(ErrorKind::GeometryError, "ball of radius " + std::to_string(ball.factor(i).radius) +
                                                " cannot host distance " + std::to_string(far[i]));
  }
  const VertexId x = ball.origin();
  const VertexId zv = descend_vertex(ball, far, 0);
  // y_i is the r n_i-th vertex on the geodesic from x_i to z_i.
  ProductVertex yv;
  const auto xvv = ball.vertex(x), zvv = ball.vertex(zv);
  for (std::size_t i = 0; i < direction.size(); ++i) yv.coords.push_back(geodesic_point(xvv.coords[i], zvv.coords[i], mid[i]));
  const VertexId y = ball.index(yv);

  SupermultRow row;
  row.direction.assign(direction.begin(), direction.end());
  row.r = r;
  row.l = l;
  Execution e1 = ex, e2 = ex, e3 = ex;
  e2.seed = mix64(ex.seed ^ 0x6e755f72ull);
  e3.seed = mix64(ex.seed ^ 0x6e755f6cull);
  row.nu_sum = estimate_tau(ball, p, x, zv, n, e1);
  row.nu_r = estimate_tau(ball, p, x, y, n, e2);
  row.nu_l = estimate_tau(ball, p, y, zv, n, e3);
  row.slack = row.nu_sum.mean - row.nu_r.mean * row.nu_l.mean;
  // The plug-in binomial error vanishes at zero counts; the Wilson width does not.
  auto spread = [z](const EstimateWithCI& e) {
    const auto [lo, hi] = e.interval(z);
    return std::max(e.std_error, (hi - lo) / (2.0 * z));
  };
  row.sigma = std::sqrt(std::pow(spread(row.nu_sum), 2) + std::pow(row.nu_l.mean * spread(row.nu_r), 2) +
                        std::pow(row.nu_r.mean * spread(row.nu_l), 2));
  row.holds = row.slack >= -z * row.sigma;
  return row;
}

std::vector<std::pair<VertexId, VertexId>> pc_check_pairs(const ProductBall& ball, int max_l1, int min_margin) {
  const std::size_t nf = ball.factors();
  std::vector<std::pair<VertexId, VertexId>> pairs;
  std::vector<int> d(nf, 0);
  // Enumerate all nonnegative d with |d|_1 <= max_l1 in lexicographic order.
  for (;;) {
    bool from_origin = true, split = true;
    std::vector<int> lo(nf), hi(nf);
    for (std::size_t i = 0; i < nf; ++i) {
      const int room = ball.factor(i).radius - min_margin;
      from_origin = from_origin && d[i] <= room;
      lo[i] = d[i] / 2;
      hi[i] = d[i] - lo[i];
      split = split && hi[i] <= room;
    }
    if (from_origin) {
      pairs.emplace_back(ball.origin(), descend_vertex(ball, d, 0));
    } else if (split) {
      pairs.emplace_back(descend_vertex(ball, lo, 0), descend_vertex(ball, hi, 1));
    }
    std::size_t i = nf;
    int sum = 0;
    for (auto v : d) sum += v;
    while (i-- > 0) {
      if (sum < max_l1) {
        ++d[i];
        break;
      }
      sum -= d[i];
      d[i] = 0;
      if (i == 0) return pairs;
    }
  }
}

std::vector<PairCheck> check_pc_estimate(const ProductBall& ball, double p,
                                         std::span<const std::pair<VertexId, VertexId>> pairs, std::size_t n,
                                         const Execution& ex, double z) {
  std::map<VertexId, std::vector<std::size_t>> by_source;
  for (std::size_t j = 0; j < pairs.size(); ++j) by_source[pairs[j].first].push_back(j);
  std::vector<PairCheck> out(pairs.size());
  const auto delta = delta_vector(ball.spec().trees);
  for (const auto& [x, idx] : by_source) {
    std::vector<VertexId> targets;
    for (auto j : idx) targets.push_back(pairs[j].second);
    const auto est = estimate_tau_many(ball, p, x, targets, n, ex);
    const auto xv = ball.vertex(x);
    for (std::size_t t = 0; t < idx.size(); ++t) {
      auto& c = out[idx[t]];
      c.x = x;
      c.y = targets[t];
      c.d = distance_vector(xv, ball.vertex(c.y));
      double s = 0.0;
      for (std::size_t i = 0; i < c.d.size(); ++i) s += delta[i] * c.d[i];
      c.bound = std::exp(-s);
      c.tau = est[t];
      c.holds = c.tau.mean - z * c.tau.std_error <= c.bound;
    }
  }
  return out;
}

double origin_tilt_sum(const ProductBall& ball, double lambda) {
  std::vector<double> terms;
  for (auto v : ball.neighbors(ball.origin())) terms.push_back(std::exp(lambda * ball.log_modular_from_origin(v)));
  return ordered_sum(terms);
}

OpenConditionReport check_open_condition_bound(const ProductBall& ball, double p, double eps, std::size_t n,
                                               const Execution& ex, double z) {
  check_probability(p);
  if (p >= 1.0) throw Error(ErrorKind::InvalidArgument, "open-condition check needs p < 1");
  if (eps < 0.0 || p + eps > 1.0) throw Error(ErrorKind::InvalidArgument, "need 0 <= eps and p + eps <= 1");
  OpenConditionReport rep;
  rep.p = p;
  rep.eps = eps;
  rep.neighbor_sum = origin_tilt_sum(ball, 0.5);
  rep.chi_p = estimate_tilted_chi(ball, p, 0.5, n, ex);
  rep.denominator = 1.0 - eps / (1.0 - p) * rep.chi_p.mean * rep.neighbor_sum;
  if (!(rep.denominator > 0.0))
    throw Error(ErrorKind::DenominatorNonpositive,
                "1 - eps/(1-p) chi S = " + std::to_string(rep.denominator) + " at eps = " + std::to_string(eps));
  rep.chi_p_eps = eps == 0.0 ? rep.chi_p : estimate_tilted_chi(ball, p + eps, 0.5, n, ex);
  rep.bound = rep.chi_p.mean / rep.denominator;
  rep.bound_stderr = rep.chi_p.std_error / (rep.denominator * rep.denominator);
  const double sigma = std::hypot(rep.chi_p_eps.std_error, rep.bound_stderr);
  rep.holds = eps == 0.0 || rep.chi_p_eps.mean - rep.bound <= z * sigma;
  return rep;
}

BoundConstants compute_bound_constants(const ProductSpec& trees, double pc) {
  if (trees.empty()) throw Error(ErrorKind::InvalidArgument, "need at least one tree");
  BoundConstants c;
  double chi = 1.0, tri = 1.0, bub = 1.0, gap = 1.0, root_sum = 0.0;
  for (const auto& t : trees) {
    const double a = t.arity();
    const double g = std::sqrt(a) - 1.0;
    chi *= a / (g * g);
    tri *= a * a * a / std::pow(g, 6);
    bub *= a * a / std::pow(g, 4);
    gap *= g * g / a;
    root_sum += std::sqrt(a);
  }
  c.chi_bound = chi;
  c.triangle_bound = tri;
  c.bubble_bound = bub;
  if (pc >= 0.0) {
    if (pc > 1.0) throw Error(ErrorKind::InvalidArgument, "p_c must lie in [0,1]");
    c.has_gap = true;
    c.pu_gap_bound = (1.0 - pc) / (2.0 * root_sum) * gap;
  }
  return c;
}

FlatnessResult bisect_flatness(const FlatnessProtocol& proto, const FlatnessEvaluator& evaluate) {
  if (!(proto.lo < proto.hi)) throw Error(ErrorKind::InvalidArgument, "flatness bracket must satisfy lo < hi");
  FlatnessResult res;
  std::map<std::pair<double, std::size_t>, std::pair<double, double>> memo;
  auto decide = [&](double x, std::size_t start) {
    FlatnessStep s;
    s.x = x;
    for (std::size_t n = std::max<std::size_t>(1, start);; n = std::min(proto.max_replicas, 2 * n)) {
      auto it = memo.find({x, n});
      if (it == memo.end()) it = memo.emplace(std::pair{x, n}, evaluate(x, n)).first;
      const auto [ratio, se] = it->second;
      s.ratio = ratio;
      s.stderr_ = se;
      s.replicas = n;
      s.sign = std::fabs(ratio - 1.0) > proto.z * se ? (ratio > 1.0 ? 1 : -1) : 0;
      if (s.sign != 0 || n >= proto.max_replicas || interrupt_requested()) break;
    }
    res.steps.push_back(s);
    return s.sign;
  };
  double lo = proto.lo, hi = proto.hi;
  // The bracket ends are far from the crossing, so a small probe suffices.
  const std::size_t probe = std::max<std::size_t>(100, proto.replicas / 8);
  if (decide(lo, probe) >= 0) throw Error(ErrorKind::NoConvergence, "lower bracket end is not below the crossing");
  if (decide(hi, probe) <= 0) throw Error(ErrorKind::NoConvergence, "upper bracket end is not above the crossing");
  for (int step = 0; step < proto.max_steps && (hi - lo) / 2 > proto.tolerance; ++step) {
    if (interrupt_requested()) break;
    const double mid = 0.5 * (lo + hi);
    const int s = decide(mid, proto.replicas);
    if (s < 0) {
      lo = mid;
    } else if (s > 0) {
      hi = mid;
    } else {
      // Undecided: tighten from both sides at the quarter points.
      const double q1 = 0.5 * (lo + mid), q3 = 0.5 * (mid + hi);
      bool moved = false;
      if (decide(q1, proto.replicas) < 0) lo = q1, moved = true;
      if (decide(q3, proto.replicas) > 0) hi = q3, moved = true;
      if (!moved) break;
    }
  }
  res.lo = lo;
  res.hi = hi;
  return res;
}

PcEstimate estimate_pc(const ProductSpec& trees, const PcProtocol& proto, const Execution& ex) {
  const std::size_t nf = trees.size();
  if (proto.radii.size() != nf) throw Error(ErrorKind::InvalidArgument, "pc ladder radii must match the trees");
  BallSpec spec;
  spec.trees = trees;
  for (auto r : proto.radii) spec.radii.push_back(r + 4);
  const ProductBall ball(spec);

  std::vector<std::vector<std::uint8_t>> inside, boundary;
  for (int step = 0; step <= 4; step += 2) {
    std::vector<int> lim(proto.radii);
    for (auto& v : lim) v += step;
    inside.push_back(ball.inside_mask(lim));
    boundary.push_back(ball.boundary_mask(lim));
  }

  int ktot = 0;
  for (const auto& t : trees) ktot += t.degree();
  FlatnessProtocol fp;
  fp.lo = proto.lo >= 0.0 ? proto.lo : 0.5 / (ktot - 1);
  fp.hi = proto.hi >= 0.0 ? proto.hi : std::min(0.99, 1.5 / (ktot - 1));
  fp.replicas = proto.replicas;
  fp.max_replicas = proto.max_replicas;
  fp.tolerance = proto.tolerance;
  fp.z = proto.z;

  PcEstimate out;
  auto evaluate = [&](double p, std::size_t n) {
    const auto rule = BernoulliRule::for_probability(p);
    const auto rows = run_replicas<std::array<double, 3>>(
        0, n, ex.threads, [&] { return ClusterExplorer(ball.graph()); },
        [&](ClusterExplorer& e, std::size_t r) {
          const auto s = stream_for(ex, r, tags::protocol);
          std::array<double, 3> g{};
          for (std::size_t j = 0; j < 3; ++j) {
            e.explore(ball.origin(), s, rule, inside[j].data());
            std::size_t hits = 0;
            for (auto v : e.members()) hits += boundary[j][v];
            g[j] = static_cast<double>(hits);
          }
          return g;
        });
    std::array<std::vector<double>, 3> g;
    for (const auto& row : rows)
      for (std::size_t j = 0; j < 3; ++j) g[j].push_back(row[j]);
    LadderPoint lp{p, {}};
    for (std::size_t j = 0; j < 3; ++j) lp.g.push_back(normal_estimate(g[j]));
    out.ladder.push_back(std::move(lp));
    if (ordered_sum(g[0]) <= 0.0) return std::pair{0.0, 0.0};
    const auto ratio = ratio_estimate(g[2], g[0]);
    return std::pair{ratio.mean, ratio.std_error};
  };
  out.search = bisect_flatness(fp, evaluate);
  out.estimate = {0.5 * (out.search.lo + out.search.hi), 0.5 * (out.search.hi - out.search.lo),
                  out.search.steps.empty() ? 0 : out.search.steps.back().replicas, CiMethod::bracket};
  return out;
}

}  // namespace treelab
