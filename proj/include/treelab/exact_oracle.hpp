#pragma once

// Ground truth: exhaustive enumeration on tiny graphs and closed forms on a
// single regular tree. Nothing here shares code paths with the samplers
// beyond the Graph container.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "treelab/product_graph.hpp"

namespace treelab {

inline constexpr std::size_t kMaxEnumeratedEdges = 24;
inline constexpr std::size_t kMaxEnumeratedSpins = 20;
inline constexpr std::size_t kMaxTinyVertices = 32;

struct TinyGraph {
  std::string name;
  std::size_t vertex_count = 0;
  std::vector<Edge> edges;
  // log Delta is log_weight[y] - log_weight[x]; zeros for untilted graphs.
  std::vector<double> log_weight;

  Graph graph() const { return Graph(vertex_count, edges); }
};

TinyGraph make_tiny_graph(std::string name, std::size_t vertex_count, std::vector<Edge> edges,
                          std::vector<double> log_weight = {});
TinyGraph tiny_from_ball(const ProductBall& ball, std::string name);

// The graphs used by oracle-equivalence suites.
std::vector<TinyGraph> tiny_graph_catalog();

// Exhaustive bond enumeration: for every pair (x, y) the number of edge
// subsets with k open edges and c clusters in which x and y are connected.
// Evaluating at any p or cluster weight q is then exact and cheap.
class ConnectionTable {
 public:
  explicit ConnectionTable(const TinyGraph& g);

  std::size_t vertex_count() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return m_; }

  double tau(double p, std::size_t x, std::size_t y) const;
  std::vector<double> tau_matrix(double p) const;  // row-major n x n
  // Random-cluster connection probability with cluster weight q.
  double fk_connect(double p, double q, std::size_t x, std::size_t y) const;

 private:
  std::size_t pair_index(std::size_t x, std::size_t y) const noexcept;
  double weighted(double p, double q, std::size_t pair) const;

  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<std::uint32_t> counts_;  // [pair][k][c]; pair n*(n+1)/2 is the "any" row
  std::size_t any_pair_ = 0;
};

double brute_tau(const TinyGraph& g, double p, std::size_t x, std::size_t y);
double brute_chi(const TinyGraph& g, double p, std::size_t x);
double brute_tilted_chi(const TinyGraph& g, double p, double lambda, std::size_t x);
double brute_triangle(const TinyGraph& g, double p, std::size_t x);
double brute_fk_connect(const TinyGraph& g, double p, double q, std::size_t x, std::size_t y);

// Same functionals from a precomputed table (for repeated evaluation).
double table_chi(const ConnectionTable& t, double p, std::size_t x);
double table_tilted_chi(const ConnectionTable& t, const TinyGraph& g, double p, double lambda, std::size_t x);
double table_triangle(const ConnectionTable& t, double p, std::size_t x);

// Free-boundary Ising with weights exp(beta sum_{uv} s_u s_v + h sum_v s_v).
struct SpinTable {
  std::vector<double> correlation;  // n x n, <s_x s_y> at h = 0
};
SpinTable brute_ising_correlations(const TinyGraph& g, double beta);
double brute_ising_two_point(const TinyGraph& g, double beta, std::size_t x, std::size_t y);
double brute_ising_bubble(const TinyGraph& g, double beta, std::size_t x);
double brute_ising_susceptibility(const TinyGraph& g, double beta, std::size_t x);
double brute_ising_magnetization(const TinyGraph& g, double beta, double h, std::size_t x);

// Single k-regular tree closed forms.
double tree_tau_exact(int k, double p, int d);
double tree_pc(int k);
double tree_ising_exact(int k, double beta, int d);
double tree_betac(int k);
// sum_x <s_0 s_x> on the infinite tree (infinity at or above beta_c).
double tree_ising_susceptibility(int k, double beta);
// Same sum restricted to the ball of radius R.
double tree_ising_susceptibility(int k, double beta, int radius);

}  // namespace treelab
