#include "treelab/product_graph.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "treelab/errors.hpp"
#include "treelab/rng.hpp"

namespace treelab {

Graph::Graph(std::size_t vertex_count, std::vector<Edge> edges, std::vector<std::uint64_t> edge_keys)
    : edges_(std::move(edges)), keys_(std::move(edge_keys)) {
  if (vertex_count > std::numeric_limits<VertexId>::max())
    throw Error(ErrorKind::CapacityExceeded, "vertex count exceeds 32-bit ids");
  if (keys_.empty()) {
    keys_.resize(edges_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e) keys_[e] = mix64(e);
  }
  if (keys_.size() != edges_.size()) throw Error(ErrorKind::InvalidArgument, "edge key count mismatch");
  offsets_.assign(vertex_count + 1, 0);
  for (const auto& e : edges_) {
    if (e.u >= vertex_count || e.v >= vertex_count) throw Error(ErrorKind::IndexOutOfRange, "edge endpoint");
    if (e.u == e.v) throw Error(ErrorKind::InvalidArgument, "self-loop");
    ++offsets_[e.u + 1];
    ++offsets_[e.v + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  incidence_.resize(offsets_.back());
  auto fill = offsets_;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto id = static_cast<EdgeId>(e);
    incidence_[fill[edges_[e].u]++] = {edges_[e].v, id};
    incidence_[fill[edges_[e].v]++] = {edges_[e].u, id};
  }
}

std::vector<VertexId> Graph::neighbors(VertexId v) const {
  if (v >= vertex_count()) throw Error(ErrorKind::IndexOutOfRange, "vertex id " + std::to_string(v));
  std::vector<VertexId> out;
  for (const auto& inc : incident(v)) out.push_back(inc.to);
  return out;
}

bool Graph::is_connected() const {
  const auto n = vertex_count();
  if (n == 0) return true;
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<VertexId> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (const auto& inc : incident(v))
      if (!seen[inc.to]) {
        seen[inc.to] = 1;
        ++count;
        stack.push_back(inc.to);
      }
  }
  return count == n;
}

BallSpec make_ball_spec(std::span<const int> degrees, std::span<const int> radii) {
  BallSpec spec;
  spec.trees = make_product_spec(degrees);
  spec.radii.assign(radii.begin(), radii.end());
  return spec;
}

std::uint64_t ball_vertex_count(const BallSpec& spec) {
  if (spec.trees.size() != spec.radii.size())
    throw Error(ErrorKind::InvalidArgument, "ball spec: tree and radius counts differ");
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < spec.trees.size(); ++i) {
    if (spec.radii[i] < 1) throw Error(ErrorKind::InvalidArgument, "ball spec: radii must be >= 1");
    const auto b = ball_size(spec.trees[i], static_cast<std::uint64_t>(spec.radii[i]));
    if (total > std::numeric_limits<std::uint64_t>::max() / b)
      throw Error(ErrorKind::CapacityExceeded, "ball size overflows");
    total *= b;
  }
  return total;
}

namespace {

FactorBall build_factor(const TreeSpec& tree, int radius) {
  FactorBall f;
  f.tree = tree;
  f.radius = radius;
  // Breadth-first from the root over tree neighbors, then sort.
  std::vector<TreeVertex> frontier{tree_root(tree)};
  std::map<TreeVertex, int> seen{{frontier.front(), 0}};
  for (int d = 0; d < radius; ++d) {
    std::vector<TreeVertex> next;
    for (const auto& v : frontier)
      for (auto& u : tree_neighbors(v))
        if (!seen.contains(u)) {
          seen.emplace(u, d + 1);
          next.push_back(std::move(u));
        }
    frontier = std::move(next);
  }
  for (const auto& [v, d] : seen) {
    f.index.emplace(v, static_cast<std::uint32_t>(f.vertices.size()));
    f.vertices.push_back(v);
    f.depth.push_back(v.depth());
    f.level.push_back(v.level());
  }
  f.children.resize(f.vertices.size());
  f.parent.assign(f.vertices.size(), -1);
  for (std::size_t i = 0; i < f.vertices.size(); ++i) {
    if (auto it = f.index.find(tree_parent(f.vertices[i])); it != f.index.end()) f.parent[i] = it->second;
    for (const auto& c : tree_children(f.vertices[i]))
      if (auto it = f.index.find(c); it != f.index.end()) f.children[i].push_back(it->second);
  }
  return f;
}

}  // namespace

ProductBall::ProductBall(const BallSpec& spec) : spec_(spec) {
  const auto count = ball_vertex_count(spec);
  if (count > spec.max_vertices)
    throw Error(ErrorKind::CapacityExceeded, "product ball would have " + std::to_string(count) +
                                                 " vertices (cap " + std::to_string(spec.max_vertices) + ")");
  const std::size_t n = spec.trees.size();
  for (std::size_t i = 0; i < n; ++i) {
    factors_.push_back(build_factor(spec.trees[i], spec.radii[i]));
    total_degree_ += spec.trees[i].degree();
  }
  strides_.assign(n, 1);
  for (std::size_t i = n - 1; i-- > 0;) strides_[i] = strides_[i + 1] * factors_[i + 1].vertices.size();

  std::vector<std::vector<std::uint64_t>> codes(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& v : factors_[i].vertices) codes[i].push_back(tree_vertex_code(v));

  const auto vcount = static_cast<std::size_t>(count);
  boundary_.assign(vcount, 0);
  std::vector<Edge> edges;
  std::vector<std::uint64_t> keys;
  std::vector<std::uint32_t> local(n);
  for (std::size_t id = 0; id < vcount; ++id) {
    for (std::size_t i = 0; i < n; ++i) {
      local[i] = static_cast<std::uint32_t>((id / strides_[i]) % factors_[i].vertices.size());
      if (factors_[i].depth[local[i]] == factors_[i].radius) boundary_[id] = 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (auto c : factors_[i].children[local[i]]) {
        const std::size_t w = id + (static_cast<std::size_t>(c) - local[i]) * strides_[i];
        std::uint64_t h = 0x74726565ull;
        for (std::size_t j = 0; j < n; ++j) h = mix64(h ^ (j == i ? codes[j][c] : codes[j][local[j]]));
        keys.push_back(mix64(h ^ ((i + 1) * 0x9E3779B97F4A7C15ull)));
        edges.push_back({static_cast<VertexId>(id), static_cast<VertexId>(w)});
      }
    }
  }
  graph_ = Graph(vcount, std::move(edges), std::move(keys));
}

std::vector<VertexId> ProductBall::neighbors(VertexId id) const { return graph_.neighbors(id); }

bool ProductBall::is_boundary(VertexId id) const {
  if (id >= vertex_count()) throw Error(ErrorKind::IndexOutOfRange, "vertex id " + std::to_string(id));
  return boundary_[id] != 0;
}

ProductVertex ProductBall::vertex(VertexId id) const {
  if (id >= vertex_count()) throw Error(ErrorKind::IndexOutOfRange, "vertex id " + std::to_string(id));
  ProductVertex v;
  for (std::size_t i = 0; i < factors_.size(); ++i) v.coords.push_back(factors_[i].vertices[local_index(id, i)]);
  return v;
}

VertexId ProductBall::index(const ProductVertex& v) const {
  if (v.coords.size() != factors_.size()) throw Error(ErrorKind::InvalidArgument, "factor count mismatch");
  std::size_t id = 0;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const auto it = factors_[i].index.find(v.coords[i]);
    if (it == factors_[i].index.end() || v.coords[i].degree != factors_[i].tree.degree())
      throw Error(ErrorKind::IndexOutOfRange, "vertex " + to_string(v.coords[i]) + " outside the ball");
    id += it->second * strides_[i];
  }
  return static_cast<VertexId>(id);
}

std::vector<int> ProductBall::depths(VertexId id) const {
  std::vector<int> d(factors_.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = depth(id, i);
  return d;
}

double ProductBall::log_modular_from_origin(VertexId id) const {
  double s = 0.0;
  for (std::size_t i = 0; i < factors_.size(); ++i) s += factors_[i].tree.delta() * level(id, i);
  return s;
}

std::vector<std::uint8_t> ProductBall::inside_mask(std::span<const int> limits) const {
  if (limits.size() != factors_.size()) throw Error(ErrorKind::InvalidArgument, "limit vector length");
  for (std::size_t i = 0; i < limits.size(); ++i)
    if (limits[i] > factors_[i].radius) throw Error(ErrorKind::RadiusTooSmall, "sub-ball exceeds ball radius");
  std::vector<std::uint8_t> mask(vertex_count(), 1);
  for (std::size_t id = 0; id < mask.size(); ++id)
    for (std::size_t i = 0; i < limits.size(); ++i)
      if (depth(static_cast<VertexId>(id), i) > limits[i]) mask[id] = 0;
  return mask;
}

std::vector<std::uint8_t> ProductBall::boundary_mask(std::span<const int> limits) const {
  auto mask = inside_mask(limits);
  for (std::size_t id = 0; id < mask.size(); ++id) {
    if (!mask[id]) continue;
    bool edge = false;
    for (std::size_t i = 0; i < limits.size(); ++i) edge = edge || depth(static_cast<VertexId>(id), i) == limits[i];
    mask[id] = edge ? 1 : 0;
  }
  return mask;
}

std::vector<VertexId> ProductBall::sphere(std::span<const int> d) const {
  if (d.size() != factors_.size()) throw Error(ErrorKind::InvalidArgument, "distance vector length");
  std::vector<VertexId> out;
  for (std::size_t id = 0; id < vertex_count(); ++id) {
    bool match = true;
    for (std::size_t i = 0; i < d.size() && match; ++i) match = depth(static_cast<VertexId>(id), i) == d[i];
    if (match) out.push_back(static_cast<VertexId>(id));
  }
  return out;
}

int ProductBall::margin(VertexId id) const {
  int m = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < factors_.size(); ++i) m = std::min(m, factors_[i].radius - depth(id, i));
  return m;
}

void dump_graph(const ProductBall& ball, std::ostream& out) {
  nlohmann::json header;
  std::vector<int> degrees;
  for (const auto& t : ball.spec().trees) degrees.push_back(t.degree());
  header["degrees"] = degrees;
  header["radii"] = ball.spec().radii;
  header["vertices"] = ball.vertex_count();
  header["edges"] = ball.edge_count();
  header["origin"] = ball.origin();
  out << header.dump() << '\n';
  for (const auto& e : ball.graph().edges()) out << e.u << ' ' << e.v << '\n';
}

}  // namespace treelab
