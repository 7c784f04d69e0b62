#pragma once

// Combinatorics of regular trees relative to a fixed end, and the product
// algebra (distance vectors, height vectors, modular function) built on top.
//
// A vertex of the k-regular tree is addressed horocyclically: climb `up`
// steps from the root toward the distinguished end, then descend along the
// word `down` of child labels in {0, ..., k-2}. Every vertex labels its
// children 0..k-2 and the child lying on the ray toward the root is always
// label k-2, so a descent that starts right after a climb may not begin with
// k-2 (that would retrace the arrival edge).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace treelab {

class TreeSpec {
 public:
  explicit TreeSpec(int degree);
  int degree() const noexcept { return degree_; }
  int arity() const noexcept { return degree_ - 1; }
  double delta() const;  // log(k - 1), nats
  friend bool operator==(const TreeSpec&, const TreeSpec&) = default;

 private:
  int degree_;
};

struct TreeVertex {
  int degree = 3;
  std::uint32_t up = 0;
  std::vector<std::uint8_t> down;

  int depth() const noexcept { return static_cast<int>(up + down.size()); }
  int level() const noexcept { return static_cast<int>(up) - static_cast<int>(down.size()); }
  friend bool operator==(const TreeVertex&, const TreeVertex&) = default;
  friend auto operator<=>(const TreeVertex& a, const TreeVertex& b) {
    if (auto c = a.up <=> b.up; c != 0) return c;
    return a.down <=> b.down;
  }
};

std::string to_string(const TreeVertex& v);

TreeVertex tree_root(const TreeSpec& spec);
TreeVertex canonical_vertex(const TreeSpec& spec, std::uint32_t up, std::span<const std::uint8_t> down);
TreeVertex canonical_vertex(const TreeSpec& spec, std::uint32_t up, std::initializer_list<int> down);
bool is_canonical(const TreeVertex& v) noexcept;

TreeVertex tree_parent(const TreeVertex& v);
std::vector<TreeVertex> tree_children(const TreeVertex& v);
std::vector<TreeVertex> tree_neighbors(const TreeVertex& v);

int tree_distance(const TreeVertex& x, const TreeVertex& y);
int height_diff(const TreeVertex& x, const TreeVertex& y);

// The vertex at distance `steps` from x on the geodesic from x to y.
TreeVertex geodesic_point(const TreeVertex& x, const TreeVertex& y, int steps);

// Injective 64-bit code for vertices with up < 2^8 and |down| below the
// packing limit of the arity; used to derive radius-independent edge keys.
std::uint64_t tree_vertex_code(const TreeVertex& v);

std::uint64_t level_sphere_count(const TreeSpec& spec, std::uint64_t up, std::uint64_t down);
std::uint64_t sphere_count(const TreeSpec& spec, std::uint64_t d);
std::uint64_t ball_size(const TreeSpec& spec, std::uint64_t radius);

using ProductSpec = std::vector<TreeSpec>;

ProductSpec make_product_spec(std::span<const int> degrees);

struct ProductVertex {
  std::vector<TreeVertex> coords;
  friend bool operator==(const ProductVertex&, const ProductVertex&) = default;
};

ProductVertex product_origin(const ProductSpec& spec);

std::vector<double> delta_vector(const ProductSpec& spec);
std::vector<int> distance_vector(const ProductVertex& x, const ProductVertex& y);
std::vector<int> height_vector(const ProductVertex& x, const ProductVertex& y);

// delta . h(x, y); the modular function itself is exp of this.
double log_modular(const ProductVertex& x, const ProductVertex& y);
double log_modular(const ProductSpec& spec, std::span<const int> heights);

}  // namespace treelab
