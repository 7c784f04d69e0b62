#include "treelab/tree_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "treelab/errors.hpp"

namespace treelab {

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a)
    throw Error(ErrorKind::TooLarge, "tree count overflows 64 bits");
  return a * b;
}

std::uint64_t checked_pow(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < exp; ++i) r = checked_mul(r, base);
  return r;
}

// Descent word of v read from its ancestor `top` levels above the root's
// ancestral line (top >= v.up).
std::vector<std::uint8_t> word_from(const TreeVertex& v, std::uint32_t top) {
  std::vector<std::uint8_t> u(top - v.up, static_cast<std::uint8_t>(v.degree - 2));
  u.insert(u.end(), v.down.begin(), v.down.end());
  return u;
}

TreeVertex from_word(int degree, std::uint32_t top, std::span<const std::uint8_t> u) {
  const auto back = static_cast<std::uint8_t>(degree - 2);
  std::size_t j = 0;
  while (j < u.size() && j < top && u[j] == back) ++j;
  TreeVertex v;
  v.degree = degree;
  v.up = top - static_cast<std::uint32_t>(j);
  v.down.assign(u.begin() + static_cast<std::ptrdiff_t>(j), u.end());
  return v;
}

void require_same_tree(const TreeVertex& x, const TreeVertex& y) {
  if (x.degree != y.degree)
    throw Error(ErrorKind::InvalidArgument, "vertices belong to trees of different degree");
}

}  // namespace

TreeSpec::TreeSpec(int degree) : degree_(degree) {
  if (degree < 3)
    throw Error(ErrorKind::ConstraintViolation, "tree degree must be at least 3, got " + std::to_string(degree));
  if (degree > 255) throw Error(ErrorKind::ConstraintViolation, "tree degree above 255 is not supported");
}

double TreeSpec::delta() const { return std::log(static_cast<double>(degree_ - 1)); }

std::string to_string(const TreeVertex& v) {
  std::string s = "(m=" + std::to_string(v.up) + ",w=";
  if (v.down.empty()) s += "e";
  for (auto c : v.down) s += std::to_string(static_cast<int>(c));
  return s + ")";
}

TreeVertex tree_root(const TreeSpec& spec) {
  TreeVertex v;
  v.degree = spec.degree();
  return v;
}

bool is_canonical(const TreeVertex& v) noexcept {
  for (auto c : v.down)
    if (c > v.degree - 2) return false;
  if (v.up >= 1 && !v.down.empty() && v.down.front() == v.degree - 2) return false;
  return true;
}

TreeVertex canonical_vertex(const TreeSpec& spec, std::uint32_t up, std::span<const std::uint8_t> down) {
  TreeVertex v;
  v.degree = spec.degree();
  v.up = up;
  v.down.assign(down.begin(), down.end());
  for (auto c : v.down)
    if (c > spec.degree() - 2)
      throw Error(ErrorKind::ConstraintViolation,
                  "letter " + std::to_string(static_cast<int>(c)) + " outside alphabet of degree " +
                      std::to_string(spec.degree()));
  if (!is_canonical(v))
    throw Error(ErrorKind::ConstraintViolation,
                "first descent letter k-2 retraces the arrival edge in " + to_string(v));
  return v;
}

TreeVertex canonical_vertex(const TreeSpec& spec, std::uint32_t up, std::initializer_list<int> down) {
  std::vector<std::uint8_t> w;
  for (int c : down) {
    if (c < 0 || c > 255) throw Error(ErrorKind::ConstraintViolation, "letter out of range");
    w.push_back(static_cast<std::uint8_t>(c));
  }
  return canonical_vertex(spec, up, w);
}

TreeVertex tree_parent(const TreeVertex& v) {
  TreeVertex p = v;
  if (p.down.empty())
    ++p.up;
  else
    p.down.pop_back();
  return p;
}

std::vector<TreeVertex> tree_children(const TreeVertex& v) {
  std::vector<TreeVertex> out;
  out.reserve(static_cast<std::size_t>(v.degree - 1));
  for (int c = 0; c <= v.degree - 2; ++c) {
    TreeVertex ch = v;
    if (v.down.empty() && v.up >= 1) {
      if (c == v.degree - 2) {
        --ch.up;
      } else {
        ch.down.push_back(static_cast<std::uint8_t>(c));
      }
    } else {
      ch.down.push_back(static_cast<std::uint8_t>(c));
    }
    out.push_back(std::move(ch));
  }
  return out;
}

std::vector<TreeVertex> tree_neighbors(const TreeVertex& v) {
  auto out = tree_children(v);
  out.insert(out.begin(), tree_parent(v));
  return out;
}

int tree_distance(const TreeVertex& x, const TreeVertex& y) {
  require_same_tree(x, y);
  const std::uint32_t top = std::max(x.up, y.up);
  const auto ux = word_from(x, top);
  const auto uy = word_from(y, top);
  const auto mm = std::mismatch(ux.begin(), ux.end(), uy.begin(), uy.end());
  const auto common = static_cast<int>(mm.first - ux.begin());
  return static_cast<int>(ux.size() + uy.size()) - 2 * common;
}

int height_diff(const TreeVertex& x, const TreeVertex& y) {
  require_same_tree(x, y);
  return y.level() - x.level();
}

TreeVertex geodesic_point(const TreeVertex& x, const TreeVertex& y, int steps) {
  require_same_tree(x, y);
  const std::uint32_t top = std::max(x.up, y.up);
  const auto ux = word_from(x, top);
  const auto uy = word_from(y, top);
  const auto mm = std::mismatch(ux.begin(), ux.end(), uy.begin(), uy.end());
  const auto common = static_cast<int>(mm.first - ux.begin());
  const int climb = static_cast<int>(ux.size()) - common;
  const int total = climb + static_cast<int>(uy.size()) - common;
  if (steps < 0 || steps > total) throw Error(ErrorKind::InvalidArgument, "geodesic step out of range");
  if (steps <= climb)
    return from_word(x.degree, top, std::span(ux).first(ux.size() - static_cast<std::size_t>(steps)));
  return from_word(x.degree, top, std::span(uy).first(static_cast<std::size_t>(common + steps - climb)));
}

std::uint64_t tree_vertex_code(const TreeVertex& v) {
  const auto arity = static_cast<std::uint64_t>(v.degree - 1);
  if (v.up >= 256 || v.down.size() >= 256) throw Error(ErrorKind::TooLarge, "vertex too deep to encode");
  std::uint64_t digits = 0;
  const std::uint64_t limit = std::uint64_t{1} << 48;
  for (auto c : v.down) {
    if (digits > (limit - 1 - c) / arity) throw Error(ErrorKind::TooLarge, "vertex too deep to encode");
    digits = digits * arity + c;
  }
  return (static_cast<std::uint64_t>(v.up) << 56) | (static_cast<std::uint64_t>(v.down.size()) << 48) | digits;
}

std::uint64_t level_sphere_count(const TreeSpec& spec, std::uint64_t up, std::uint64_t down) {
  const auto k = static_cast<std::uint64_t>(spec.degree());
  if (up == 0) return checked_pow(k - 1, down);
  if (down == 0) return 1;
  return checked_mul(checked_pow(k - 1, down - 1), k - 2);
}

std::uint64_t sphere_count(const TreeSpec& spec, std::uint64_t d) {
  if (d == 0) return 1;
  const auto k = static_cast<std::uint64_t>(spec.degree());
  return checked_mul(k, checked_pow(k - 1, d - 1));
}

std::uint64_t ball_size(const TreeSpec& spec, std::uint64_t radius) {
  std::uint64_t total = 0;
  for (std::uint64_t d = 0; d <= radius; ++d) {
    const auto s = sphere_count(spec, d);
    if (total > std::numeric_limits<std::uint64_t>::max() - s) throw Error(ErrorKind::TooLarge, "ball too large");
    total += s;
  }
  return total;
}

ProductSpec make_product_spec(std::span<const int> degrees) {
  if (degrees.empty()) throw Error(ErrorKind::InvalidArgument, "product needs at least one tree");
  ProductSpec spec;
  for (int k : degrees) spec.emplace_back(k);
  return spec;
}

ProductVertex product_origin(const ProductSpec& spec) {
  ProductVertex v;
  for (const auto& t : spec) v.coords.push_back(tree_root(t));
  return v;
}

std::vector<double> delta_vector(const ProductSpec& spec) {
  std::vector<double> d;
  for (const auto& t : spec) d.push_back(t.delta());
  return d;
}

namespace {
void require_same_product(const ProductVertex& x, const ProductVertex& y) {
  if (x.coords.size() != y.coords.size())
    throw Error(ErrorKind::InvalidArgument, "product vertices have different factor counts");
}
}  // namespace

std::vector<int> distance_vector(const ProductVertex& x, const ProductVertex& y) {
  require_same_product(x, y);
  std::vector<int> d(x.coords.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = tree_distance(x.coords[i], y.coords[i]);
  return d;
}

std::vector<int> height_vector(const ProductVertex& x, const ProductVertex& y) {
  require_same_product(x, y);
  std::vector<int> h(x.coords.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = height_diff(x.coords[i], y.coords[i]);
  return h;
}

double log_modular(const ProductSpec& spec, std::span<const int> heights) {
  if (spec.size() != heights.size()) throw Error(ErrorKind::InvalidArgument, "height vector length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < heights.size(); ++i) s += spec[i].delta() * heights[i];
  return s;
}

double log_modular(const ProductVertex& x, const ProductVertex& y) {
  const auto h = height_vector(x, y);
  ProductSpec spec;
  for (const auto& c : x.coords) spec.emplace_back(c.degree);
  return log_modular(spec, h);
}

}  // namespace treelab
