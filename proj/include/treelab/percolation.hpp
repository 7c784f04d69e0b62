#pragma once

// Bernoulli bond percolation on finite graphs. An edge is open iff the word
// its key addresses in the replica's stream falls below the threshold for p,
// so configurations at different p (and on nested balls) share randomness.

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "treelab/parallel.hpp"
#include "treelab/product_graph.hpp"
#include "treelab/rng.hpp"
#include "treelab/stats.hpp"

namespace treelab {

inline constexpr VertexId kNoVertex = std::numeric_limits<VertexId>::max();

struct PercConfig {
  double p = 0.0;
  std::uint64_t master = 0;
  std::uint64_t replica = 0;
  std::uint64_t tag = 0;
  std::vector<std::uint64_t> open_bits;

  bool open(EdgeId e) const noexcept { return (open_bits[e >> 6] >> (e & 63)) & 1u; }
  std::size_t open_count() const noexcept;
};

PercConfig sample_config(const Graph& g, double p, const ReplicaStream& stream);

// Union-find with path halving and union by rank.
class ClusterForest {
 public:
  explicit ClusterForest(std::size_t n = 0);

  VertexId find(VertexId v) noexcept;
  bool unite(VertexId a, VertexId b) noexcept;
  bool connected(VertexId a, VertexId b) noexcept { return find(a) == find(b); }
  std::size_t size() const noexcept { return parent_.size(); }
  std::size_t cluster_count() const noexcept { return clusters_; }
  std::size_t cluster_size(VertexId v) noexcept { return size_[find(v)]; }
  void reset(std::size_t n);

 private:
  std::vector<VertexId> parent_;
  std::vector<std::uint8_t> rank_;
  std::vector<std::uint32_t> size_;
  std::size_t clusters_ = 0;
};

ClusterForest build_clusters(const Graph& g, const PercConfig& config);

// Breadth-first exploration of a single open cluster that draws edge states
// on demand. Vertices with allowed[v] == 0 are never entered, which restricts
// the configuration to a sub-ball without resampling.
class ClusterExplorer {
 public:
  explicit ClusterExplorer(const Graph& g);

  // Returns true if `target` was reached (exploration stops there early).
  bool explore(VertexId source, const ReplicaStream& stream, BernoulliRule rule,
               const std::uint8_t* allowed = nullptr, VertexId target = kNoVertex);

  std::span<const VertexId> members() const noexcept { return queue_; }
  bool contains(VertexId v) const noexcept { return stamp_[v] == epoch_; }
  const Graph& graph() const noexcept { return *g_; }

 private:
  const Graph* g_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
  std::vector<VertexId> queue_;
};

// Probability estimates use Wilson intervals; sums use normal intervals.
// `allowed` restricts every estimator to a sub-ball (see ProductBall::inside_mask).
EstimateWithCI estimate_tau(const Graph& g, double p, VertexId x, VertexId y, std::size_t n,
                            const Execution& ex = {}, const std::uint8_t* allowed = nullptr);
EstimateWithCI estimate_chi(const Graph& g, double p, VertexId x, std::size_t n, const Execution& ex = {},
                            const std::uint8_t* allowed = nullptr);
// E sum_{y in C(x)} exp(lambda (log_weight[y] - log_weight[x])).
EstimateWithCI estimate_tilted_chi(const Graph& g, std::span<const double> log_weight, double p, double lambda,
                                   VertexId x, std::size_t n, const Execution& ex = {},
                                   const std::uint8_t* allowed = nullptr);
EstimateWithCI estimate_tilted_chi(const ProductBall& ball, double p, double lambda, std::size_t n,
                                   const Execution& ex = {}, const std::uint8_t* allowed = nullptr);
// Three independent configurations; statistic sum_{u in C1(x)} |C2(u) & C3(x)|.
EstimateWithCI estimate_triangle(const Graph& g, double p, VertexId x, std::size_t n, const Execution& ex = {},
                                 const std::uint8_t* allowed = nullptr);

// Connection probabilities from `source` to many targets, one exploration per replica.
std::vector<EstimateWithCI> estimate_tau_many(const Graph& g, double p, VertexId source,
                                              std::span<const VertexId> targets, std::size_t n,
                                              const Execution& ex = {}, const std::uint8_t* allowed = nullptr);

// Sphere-averaged two-point function from the origin: for each distance
// vector d, the mean of |C(0) & S_d| / |S_d|. By the symmetry of the ball
// around its root this is unbiased for tau(0, y), y in S_d.
struct ClassTau {
  std::vector<int> d;
  std::size_t sphere_size = 0;
  EstimateWithCI tau;
};
struct ClassTauSamples {
  std::vector<ClassTau> classes;
  std::vector<std::vector<double>> samples;  // [class][replica]
};
ClassTauSamples estimate_tau_classes(const ProductBall& ball, double p, std::span<const std::vector<int>> classes,
                                     std::size_t n, const Execution& ex = {}, std::uint64_t tag = tags::percolation);

// Value at the inner radius together with the value on the enclosing ball,
// both from the same configurations.
struct RadiusShift {
  EstimateWithCI inner;
  EstimateWithCI outer;
  double relative_shift = 0.0;  // outer / inner - 1
};
RadiusShift with_radius_shift(const ProductBall& outer_ball, std::span<const int> inner_radii,
                              const std::function<EstimateWithCI(const std::uint8_t*)>& estimator);

struct SupermultRow {
  std::vector<int> direction;
  int r = 0;
  int l = 0;
  EstimateWithCI nu_sum;    // nu((r + l) n)
  EstimateWithCI nu_r;      // nu(r n)
  EstimateWithCI nu_l;      // nu(l n)
  double slack = 0.0;       // nu_sum - nu_r nu_l
  double sigma = 0.0;
  bool holds = false;
};
// x = origin, z descends (r + l) n_i steps in factor i, y is r n_i steps along
// each factor geodesic. The three probabilities use independent streams.
SupermultRow check_supermultiplicativity(const ProductBall& ball, double p, std::span<const int> direction, int r,
                                         int l, std::size_t n, const Execution& ex = {}, double z = 3.0);

struct PairCheck {
  VertexId x = 0;
  VertexId y = 0;
  std::vector<int> d;
  double bound = 1.0;
  EstimateWithCI tau;
  bool holds = false;
};
// Pairs with every coordinate in the ball at margin >= min_margin realizing
// each distance vector with ||d||_1 <= max_l1: from the origin when possible,
// otherwise split evenly across the root.
std::vector<std::pair<VertexId, VertexId>> pc_check_pairs(const ProductBall& ball, int max_l1, int min_margin = 2);
std::vector<PairCheck> check_pc_estimate(const ProductBall& ball, double p,
                                         std::span<const std::pair<VertexId, VertexId>> pairs, std::size_t n,
                                         const Execution& ex = {}, double z = 3.0);

struct OpenConditionReport {
  double p = 0.0;
  double eps = 0.0;
  double neighbor_sum = 0.0;  // sum over origin neighbors of Delta^{1/2}
  EstimateWithCI chi_p;
  EstimateWithCI chi_p_eps;
  double denominator = 1.0;
  double bound = 0.0;
  double bound_stderr = 0.0;
  bool holds = false;
};
double origin_tilt_sum(const ProductBall& ball, double lambda = 0.5);
OpenConditionReport check_open_condition_bound(const ProductBall& ball, double p, double eps, std::size_t n,
                                               const Execution& ex = {}, double z = 3.0);

struct BoundConstants {
  double chi_bound = 0.0;    // prod (k-1) / (sqrt(k-1) - 1)^2
  double triangle_bound = 0.0;
  double bubble_bound = 0.0;
  bool has_gap = false;
  double pu_gap_bound = 0.0;  // needs p_c
};
BoundConstants compute_bound_constants(const ProductSpec& trees, double pc = -1.0);

// Finite-size flatness bisection shared by the percolation and Ising
// threshold estimators. evaluate(x, replicas) returns g_top / g_bottom with
// its standard error; the sign of ratio - 1 steers the bisection.
struct FlatnessStep {
  double x = 0.0;
  double ratio = 0.0;
  double stderr_ = 0.0;
  std::size_t replicas = 0;
  int sign = 0;  // -1 below, +1 above, 0 undecided
};
struct FlatnessProtocol {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t replicas = 4000;
  std::size_t max_replicas = 64000;
  double tolerance = 0.004;  // stop at this bracket half-width
  double z = 2.5;
  int max_steps = 30;
};
struct FlatnessResult {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<FlatnessStep> steps;
};
using FlatnessEvaluator = std::function<std::pair<double, double>(double x, std::size_t replicas)>;
FlatnessResult bisect_flatness(const FlatnessProtocol& protocol, const FlatnessEvaluator& evaluate);

struct PcProtocol {
  std::vector<int> radii;  // innermost ladder radii; the ladder is R, R+2, R+4
  std::size_t replicas = 4000;
  std::size_t max_replicas = 64000;
  double tolerance = 0.004;
  double z = 2.5;
  double lo = -1.0;  // default 0.5 / (K - 1)
  double hi = -1.0;  // default min(0.99, 1.5 / (K - 1))
};
struct LadderPoint {
  double p = 0.0;
  std::vector<EstimateWithCI> g;  // one per ladder radius
};
struct PcEstimate {
  EstimateWithCI estimate;  // method bracket: mean +- std_error is the final bracket
  FlatnessResult search;
  std::vector<LadderPoint> ladder;  // g_R at each bisection point
};
PcEstimate estimate_pc(const ProductSpec& trees, const PcProtocol& protocol, const Execution& ex = {});

}  // namespace treelab
