#include "treelab/exact_oracle.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "treelab/errors.hpp"

namespace treelab {

namespace {

struct Neumaier {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::fabs(sum) >= std::fabs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

void check_vertex(const TinyGraph& g, std::size_t v) {
  if (v >= g.vertex_count) throw Error(ErrorKind::IndexOutOfRange, "vertex " + std::to_string(v));
}

std::vector<double> bond_weights(double p, std::size_t m) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::InvalidArgument, "probability outside [0,1]");
  std::vector<double> w(m + 1);
  for (std::size_t k = 0; k <= m; ++k)
    w[k] = std::pow(p, static_cast<double>(k)) * std::pow(1.0 - p, static_cast<double>(m - k));
  return w;
}

}  // namespace

TinyGraph make_tiny_graph(std::string name, std::size_t vertex_count, std::vector<Edge> edges,
                          std::vector<double> log_weight) {
  if (vertex_count == 0 || vertex_count > kMaxTinyVertices)
    throw Error(ErrorKind::TooLarge, "tiny graph must have 1.." + std::to_string(kMaxTinyVertices) + " vertices");
  if (log_weight.empty()) log_weight.assign(vertex_count, 0.0);
  if (log_weight.size() != vertex_count) throw Error(ErrorKind::InvalidArgument, "log weight count");
  for (std::size_t i = 0; i < edges.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const bool same = (edges[i].u == edges[j].u && edges[i].v == edges[j].v) ||
                        (edges[i].u == edges[j].v && edges[i].v == edges[j].u);
      if (same) throw Error(ErrorKind::InvalidArgument, "tiny graph has a repeated edge");
    }
  TinyGraph g{std::move(name), vertex_count, std::move(edges), std::move(log_weight)};
  if (!g.graph().is_connected()) throw Error(ErrorKind::InvalidArgument, "tiny graph must be connected");
  return g;
}

TinyGraph tiny_from_ball(const ProductBall& ball, std::string name) {
  std::vector<double> lw(ball.vertex_count());
  for (std::size_t v = 0; v < lw.size(); ++v) lw[v] = ball.log_modular_from_origin(static_cast<VertexId>(v));
  const auto e = ball.graph().edges();
  return make_tiny_graph(std::move(name), ball.vertex_count(), std::vector<Edge>(e.begin(), e.end()), std::move(lw));
}

std::vector<TinyGraph> tiny_graph_catalog() {
  std::vector<TinyGraph> out;
  auto synthetic = [](std::size_t n) {
    std::vector<double> lw(n);
    for (std::size_t v = 0; v < n; ++v) lw[v] = std::log(2.0) * (static_cast<double>(v % 3) - 1.0);
    return lw;
  };
  out.push_back(make_tiny_graph("edge", 2, {{0, 1}}, synthetic(2)));
  out.push_back(make_tiny_graph("path3", 4, {{0, 1}, {1, 2}, {2, 3}}, synthetic(4)));
  out.push_back(make_tiny_graph("triangle", 3, {{0, 1}, {1, 2}, {0, 2}}, synthetic(3)));
  out.push_back(make_tiny_graph("diamond", 4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}}, synthetic(4)));
  out.push_back(make_tiny_graph("k4", 4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}, synthetic(4)));
  const int k3[] = {3};
  const int r1[] = {1};
  const int r2[] = {2};
  out.push_back(tiny_from_ball(ProductBall(make_ball_spec(k3, r1)), "t3_r1"));
  out.push_back(tiny_from_ball(ProductBall(make_ball_spec(k3, r2)), "t3_r2"));
  const int k33[] = {3, 3};
  const int r11[] = {1, 1};
  out.push_back(tiny_from_ball(ProductBall(make_ball_spec(k33, r11)), "t3xt3_r11"));
  return out;
}

ConnectionTable::ConnectionTable(const TinyGraph& g) : n_(g.vertex_count), m_(g.edges.size()) {
  if (m_ > kMaxEnumeratedEdges)
    throw Error(ErrorKind::TooLarge, "bond enumeration limited to " + std::to_string(kMaxEnumeratedEdges) + " edges");
  const std::size_t pairs = n_ * (n_ + 1) / 2;
  any_pair_ = pairs;
  const std::size_t row = (m_ + 1) * (n_ + 1);
  counts_.assign((pairs + 1) * row, 0);

  std::vector<std::uint32_t> pair_of(n_ * n_);
  for (std::size_t x = 0; x < n_; ++x)
    for (std::size_t y = 0; y < n_; ++y) pair_of[x * n_ + y] = static_cast<std::uint32_t>(pair_index(x, y));

  std::vector<std::uint8_t> parent(n_);
  auto find = [&](std::uint8_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  std::vector<std::uint8_t> root(n_);
  std::vector<std::int32_t> head(n_), next(n_);
  const std::uint64_t configs = std::uint64_t{1} << m_;
  for (std::uint64_t mask = 0; mask < configs; ++mask) {
    for (std::size_t v = 0; v < n_; ++v) parent[v] = static_cast<std::uint8_t>(v);
    for (std::uint64_t bits = mask; bits != 0; bits &= bits - 1) {
      const auto& e = g.edges[static_cast<std::size_t>(std::countr_zero(bits))];
      const auto a = find(static_cast<std::uint8_t>(e.u));
      const auto b = find(static_cast<std::uint8_t>(e.v));
      if (a != b) parent[a] = b;
    }
    const auto k = static_cast<std::size_t>(std::popcount(mask));
    std::size_t clusters = 0;
    std::fill(head.begin(), head.end(), -1);
    for (std::size_t v = n_; v-- > 0;) {
      root[v] = find(static_cast<std::uint8_t>(v));
      if (root[v] == v) ++clusters;
      next[v] = head[root[v]];
      head[root[v]] = static_cast<std::int32_t>(v);
    }
    const std::size_t cell = k * (n_ + 1) + clusters;
    ++counts_[any_pair_ * row + cell];
    for (std::size_t r = 0; r < n_; ++r) {
      for (auto a = head[r]; a >= 0; a = next[static_cast<std::size_t>(a)])
        for (auto b = a; b >= 0; b = next[static_cast<std::size_t>(b)])
          ++counts_[pair_of[static_cast<std::size_t>(a) * n_ + static_cast<std::size_t>(b)] * row + cell];
    }
  }
}

std::size_t ConnectionTable::pair_index(std::size_t x, std::size_t y) const noexcept {
  if (x > y) std::swap(x, y);
  return x * n_ - (x * (x - 1)) / 2 + (y - x);
}

double ConnectionTable::weighted(double p, double q, std::size_t pair) const {
  const auto w = bond_weights(p, m_);
  const std::size_t row = (m_ + 1) * (n_ + 1);
  Neumaier acc;
  for (std::size_t k = 0; k <= m_; ++k)
    for (std::size_t c = 1; c <= n_; ++c) {
      const auto cnt = counts_[pair * row + k * (n_ + 1) + c];
      if (cnt != 0) acc.add(static_cast<double>(cnt) * w[k] * std::pow(q, static_cast<double>(c)));
    }
  return acc.value();
}

double ConnectionTable::tau(double p, std::size_t x, std::size_t y) const {
  if (x >= n_ || y >= n_) throw Error(ErrorKind::IndexOutOfRange, "vertex out of range");
  return weighted(p, 1.0, pair_index(x, y));
}

std::vector<double> ConnectionTable::tau_matrix(double p) const {
  std::vector<double> t(n_ * n_);
  for (std::size_t x = 0; x < n_; ++x)
    for (std::size_t y = x; y < n_; ++y) t[x * n_ + y] = t[y * n_ + x] = tau(p, x, y);
  return t;
}

double ConnectionTable::fk_connect(double p, double q, std::size_t x, std::size_t y) const {
  if (x >= n_ || y >= n_) throw Error(ErrorKind::IndexOutOfRange, "vertex out of range");
  return weighted(p, q, pair_index(x, y)) / weighted(p, q, any_pair_);
}

double brute_tau(const TinyGraph& g, double p, std::size_t x, std::size_t y) {
  check_vertex(g, x);
  check_vertex(g, y);
  return ConnectionTable(g).tau(p, x, y);
}

double table_chi(const ConnectionTable& t, double p, std::size_t x) {
  Neumaier acc;
  for (std::size_t y = 0; y < t.vertex_count(); ++y) acc.add(t.tau(p, x, y));
  return acc.value();
}

double table_tilted_chi(const ConnectionTable& t, const TinyGraph& g, double p, double lambda, std::size_t x) {
  Neumaier acc;
  for (std::size_t y = 0; y < t.vertex_count(); ++y)
    acc.add(t.tau(p, x, y) * std::exp(lambda * (g.log_weight[y] - g.log_weight[x])));
  return acc.value();
}

double table_triangle(const ConnectionTable& t, double p, std::size_t x) {
  const auto n = t.vertex_count();
  const auto m = t.tau_matrix(p);
  Neumaier acc;
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t z = 0; z < n; ++z) acc.add(m[x * n + y] * m[y * n + z] * m[z * n + x]);
  return acc.value();
}

double brute_chi(const TinyGraph& g, double p, std::size_t x) {
  check_vertex(g, x);
  return table_chi(ConnectionTable(g), p, x);
}

double brute_tilted_chi(const TinyGraph& g, double p, double lambda, std::size_t x) {
  check_vertex(g, x);
  return table_tilted_chi(ConnectionTable(g), g, p, lambda, x);
}

double brute_triangle(const TinyGraph& g, double p, std::size_t x) {
  check_vertex(g, x);
  return table_triangle(ConnectionTable(g), p, x);
}

double brute_fk_connect(const TinyGraph& g, double p, double q, std::size_t x, std::size_t y) {
  check_vertex(g, x);
  check_vertex(g, y);
  return ConnectionTable(g).fk_connect(p, q, x, y);
}

namespace {

void check_spins(const TinyGraph& g) {
  if (g.vertex_count > kMaxEnumeratedSpins)
    throw Error(ErrorKind::TooLarge, "spin enumeration limited to " + std::to_string(kMaxEnumeratedSpins) + " vertices");
}

// Energy-shifted Boltzmann weight for spin configuration `s` (bit v set = +1).
double spin_weight(const TinyGraph& g, std::uint32_t s, double beta, double h) {
  int bonds = 0;
  for (const auto& e : g.edges) bonds += (((s >> e.u) ^ (s >> e.v)) & 1u) ? -1 : 1;
  const int field = 2 * std::popcount(s) - static_cast<int>(g.vertex_count);
  return std::exp(beta * (bonds - static_cast<int>(g.edges.size())) + h * (field - static_cast<int>(g.vertex_count)));
}

}  // namespace

SpinTable brute_ising_correlations(const TinyGraph& g, double beta) {
  check_spins(g);
  const std::size_t n = g.vertex_count;
  std::vector<Neumaier> acc(n * n);
  Neumaier z;
  for (std::uint32_t s = 0; s < (1u << n); ++s) {
    const double w = spin_weight(g, s, beta, 0.0);
    z.add(w);
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = x; y < n; ++y) {
        const bool same = ((s >> x) & 1u) == ((s >> y) & 1u);
        acc[x * n + y].add(same ? w : -w);
      }
  }
  SpinTable t;
  t.correlation.resize(n * n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = x; y < n; ++y) t.correlation[x * n + y] = t.correlation[y * n + x] = acc[x * n + y].value() / z.value();
  return t;
}

double brute_ising_two_point(const TinyGraph& g, double beta, std::size_t x, std::size_t y) {
  check_vertex(g, x);
  check_vertex(g, y);
  return brute_ising_correlations(g, beta).correlation[x * g.vertex_count + y];
}

double brute_ising_bubble(const TinyGraph& g, double beta, std::size_t x) {
  check_vertex(g, x);
  const auto t = brute_ising_correlations(g, beta);
  Neumaier acc;
  for (std::size_t y = 0; y < g.vertex_count; ++y) {
    const double c = t.correlation[x * g.vertex_count + y];
    acc.add(c * c);
  }
  return acc.value();
}

double brute_ising_susceptibility(const TinyGraph& g, double beta, std::size_t x) {
  check_vertex(g, x);
  const auto t = brute_ising_correlations(g, beta);
  Neumaier acc;
  for (std::size_t y = 0; y < g.vertex_count; ++y) acc.add(t.correlation[x * g.vertex_count + y]);
  return acc.value();
}

double brute_ising_magnetization(const TinyGraph& g, double beta, double h, std::size_t x) {
  check_spins(g);
  check_vertex(g, x);
  Neumaier num, z;
  for (std::uint32_t s = 0; s < (1u << g.vertex_count); ++s) {
    const double w = spin_weight(g, s, beta, h);
    z.add(w);
    num.add(((s >> x) & 1u) ? w : -w);
  }
  return num.value() / z.value();
}

double tree_tau_exact(int k, double p, int d) {
  TreeSpec{k};
  if (d < 0) throw Error(ErrorKind::InvalidArgument, "negative distance");
  return std::pow(p, d);
}

double tree_pc(int k) {
  TreeSpec{k};
  return 1.0 / (k - 1);
}

double tree_ising_exact(int k, double beta, int d) {
  TreeSpec{k};
  if (d < 0 || beta < 0) throw Error(ErrorKind::InvalidArgument, "need d >= 0 and beta >= 0");
  return std::pow(std::tanh(beta), d);
}

double tree_betac(int k) {
  TreeSpec{k};
  return std::atanh(1.0 / (k - 1));
}

double tree_ising_susceptibility(int k, double beta) {
  TreeSpec{k};
  const double t = std::tanh(beta);
  const double r = (k - 1) * t;
  if (r >= 1.0) return std::numeric_limits<double>::infinity();
  return 1.0 + k * t / (1.0 - r);
}

double tree_ising_susceptibility(int k, double beta, int radius) {
  TreeSpec{k};
  const double t = std::tanh(beta);
  Neumaier acc;
  acc.add(1.0);
  double shell = k * t;
  for (int d = 1; d <= radius; ++d) {
    acc.add(shell);
    shell *= (k - 1) * t;
  }
  return acc.value();
}

}  // namespace treelab
