#pragma once

// Finite truncations of T_1 x ... x T_N: each factor is cut to the ball of
// radius R_i around its root (free boundary), and the product of those balls
// is materialized with dense ids in lexicographic coordinate order.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "treelab/tree_geometry.hpp"

namespace treelab {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

struct Edge {
  VertexId u = 0;
  VertexId v = 0;
};

struct Incidence {
  VertexId to = 0;
  EdgeId edge = 0;
};

// Simple undirected graph in CSR form. Every edge carries a 64-bit key that
// addresses its random word, so configurations are functions of the key
// rather than of the edge's position in the list.
class Graph {
 public:
  Graph() = default;
  Graph(std::size_t vertex_count, std::vector<Edge> edges, std::vector<std::uint64_t> edge_keys = {});

  std::size_t vertex_count() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const std::uint64_t> edge_keys() const noexcept { return keys_; }
  std::uint64_t edge_key(EdgeId e) const noexcept { return keys_[e]; }

  std::span<const Incidence> incident(VertexId v) const noexcept {
    return {incidence_.data() + offsets_[v], incidence_.data() + offsets_[v + 1]};
  }
  std::size_t degree(VertexId v) const noexcept { return offsets_[v + 1] - offsets_[v]; }

  std::vector<VertexId> neighbors(VertexId v) const;  // checked
  bool is_connected() const;

 private:
  std::vector<Edge> edges_;
  std::vector<std::uint64_t> keys_;
  std::vector<std::size_t> offsets_;
  std::vector<Incidence> incidence_;
};

struct BallSpec {
  ProductSpec trees;
  std::vector<int> radii;
  std::uint64_t max_vertices = std::uint64_t{1} << 24;
};

BallSpec make_ball_spec(std::span<const int> degrees, std::span<const int> radii);

// Vertex count of the product ball, computed without building it.
std::uint64_t ball_vertex_count(const BallSpec& spec);

// One factor's truncated tree: vertices sorted lexicographically by (up, down).
struct FactorBall {
  TreeSpec tree{3};
  int radius = 0;
  std::vector<TreeVertex> vertices;
  std::vector<int> depth;
  std::vector<int> level;
  std::vector<std::vector<std::uint32_t>> children;  // local indices
  std::vector<std::int64_t> parent;                  // -1 when outside the ball
  std::map<TreeVertex, std::uint32_t> index;
};

class ProductBall {
 public:
  explicit ProductBall(const BallSpec& spec);

  const Graph& graph() const noexcept { return graph_; }
  operator const Graph&() const noexcept { return graph_; }

  const BallSpec& spec() const noexcept { return spec_; }
  std::size_t factors() const noexcept { return factors_.size(); }
  const FactorBall& factor(std::size_t i) const { return factors_.at(i); }

  std::size_t vertex_count() const noexcept { return graph_.vertex_count(); }
  std::size_t edge_count() const noexcept { return graph_.edge_count(); }
  VertexId origin() const noexcept { return 0; }
  int total_degree() const noexcept { return total_degree_; }

  std::vector<VertexId> neighbors(VertexId id) const;
  bool is_boundary(VertexId id) const;

  ProductVertex vertex(VertexId id) const;
  VertexId index(const ProductVertex& v) const;
  std::uint32_t local_index(VertexId id, std::size_t factor) const noexcept {
    return static_cast<std::uint32_t>((id / strides_[factor]) % factors_[factor].vertices.size());
  }
  int depth(VertexId id, std::size_t factor) const noexcept {
    return factors_[factor].depth[local_index(id, factor)];
  }
  int level(VertexId id, std::size_t factor) const noexcept {
    return factors_[factor].level[local_index(id, factor)];
  }
  std::vector<int> depths(VertexId id) const;

  // log of the modular function from the origin to id (origin at level 0).
  double log_modular_from_origin(VertexId id) const;

  // 1 for vertices whose every coordinate lies within `limits` (<= radii).
  std::vector<std::uint8_t> inside_mask(std::span<const int> limits) const;
  // Boundary vertices of the sub-ball of radius `limits`.
  std::vector<std::uint8_t> boundary_mask(std::span<const int> limits) const;

  // Vertices y with d(origin, y) == d, in id order.
  std::vector<VertexId> sphere(std::span<const int> d) const;

  // Depth margin of id to the boundary: min_i (R_i - depth_i).
  int margin(VertexId id) const;

 private:
  BallSpec spec_;
  std::vector<FactorBall> factors_;
  std::vector<std::size_t> strides_;
  std::vector<std::uint8_t> boundary_;
  Graph graph_;
  int total_degree_ = 0;
};

// Edge list text dump: one JSON header line, then "u v" per edge.
void dump_graph(const ProductBall& ball, std::ostream& out);

}  // namespace treelab
