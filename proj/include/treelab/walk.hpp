#pragma once

// Random walks on products of regular trees. A step stays put with
// probability alpha, otherwise picks factor i with probability w_i and moves
// to a uniform neighbor in that factor.
//
// Because the kernel is invariant under the root stabilizer, the law of X_n
// is uniform on each sphere S_d of the distance vector d, so everything
// exact is computed from the law of d (a chain on a small grid) and the
// sphere sizes. The ball convolution is kept as an independent check.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "treelab/parallel.hpp"
#include "treelab/percolation.hpp"
#include "treelab/product_graph.hpp"
#include "treelab/stats.hpp"

namespace treelab {

enum class KernelKind { srw, weighted, lazy };

std::string to_string(KernelKind k);
KernelKind kernel_kind_from_string(const std::string& s);

struct KernelSpec {
  KernelKind kind = KernelKind::srw;
  std::vector<double> weights;  // empty: k_i / sum_j k_j
  double laziness = 0.0;
};

// Resolves default weights and checks sum w_i = 1, w_i >= 0, 0 <= alpha < 1.
KernelSpec resolve_kernel(const KernelSpec& kernel, const ProductSpec& trees);

// Closed-form spectral radius alpha + (1 - alpha) sum_i w_i 2 sqrt(k_i - 1) / k_i.
double spectral_radius_target(const ProductSpec& trees, const KernelSpec& kernel);

struct KernelDistribution {
  int steps = 0;
  std::vector<VertexId> support;  // increasing ids
  std::vector<double> prob;

  double mass() const;
  double sup() const;
  double entropy() const;  // -sum P log P
  double at(VertexId v) const;
};

KernelDistribution exact_distribution(const ProductBall& ball, const KernelSpec& kernel, int n);

// Exact law of the distance vector d(X_0, X_n).
class DistanceLaw {
 public:
  DistanceLaw(const ProductSpec& trees, const KernelSpec& kernel, int max_steps);

  void step();
  int steps() const noexcept { return steps_; }
  int max_steps() const noexcept { return max_steps_; }
  std::size_t factors() const noexcept { return trees_.size(); }

  std::span<const double> law() const noexcept { return law_; }
  std::vector<int> class_of(std::size_t cell) const;
  double prob(std::span<const int> d) const;
  double log_sphere_size(std::size_t cell) const noexcept { return log_sphere_[cell]; }

  double mass() const;
  double return_probability() const noexcept { return law_[0]; }
  double sup_point_probability() const;  // max_d P(d) / |S_d|
  double entropy() const;                // entropy of X_n itself

 private:
  ProductSpec trees_;
  KernelSpec kernel_;
  int max_steps_;
  int steps_ = 0;
  std::vector<std::size_t> strides_;
  std::vector<double> law_, next_;
  std::vector<double> log_sphere_, inv_sphere_;
};

struct SpectralBounds {
  std::vector<double> return_root;  // p_{2n}(0,0)^{1/2n}, n = 1..n_max
  std::vector<double> sup_root;     // (sup_y P^n(0,y))^{1/n}, n = 1..n_max
  std::vector<double> sup_value;    // sup_y P^n(0,y), n = 1..n_max
  double target = 0.0;
};
SpectralBounds spectral_radius_bounds(const ProductSpec& trees, const KernelSpec& kernel, int n_max);
// Ball forms: the same exact values, with the no-truncation precondition R_i >= n_max.
SpectralBounds spectral_radius_bounds(const ProductBall& ball, const KernelSpec& kernel, int n_max);

// H_0 .. H_{n_max}.
std::vector<double> entropy_sequence(const ProductSpec& trees, const KernelSpec& kernel, int n_max);
std::vector<double> entropy_sequence(const ProductBall& ball, const KernelSpec& kernel, int n_max);

// Endpoint of an n-step walk from the ball origin (needs R_i >= n).
class WalkSampler {
 public:
  WalkSampler(const ProductBall& ball, const KernelSpec& kernel);
  VertexId sample(int n, Generator& gen) const;

 private:
  const ProductBall* ball_;
  KernelSpec kernel_;
  std::vector<std::uint8_t> edge_factor_;
};

struct SchrammAnnealedReport {
  int n = 0;
  int m_ref = 0;
  double p = 0.0;
  EstimateWithCI expectation;   // E tau_p(X_0, X_n)
  double strict_reference = 0;  // ((sup P^m)^{1/m})^n
  double rho_reference = 0;     // rho^n
  bool strict_holds = false;
  bool rho_holds = false;
  bool has_exact = false;       // single tree: E p^{|X_n|}
  double exact = 0.0;
  bool exact_agrees = false;
};
SchrammAnnealedReport schramm_annealed_check(const ProductBall& ball, const KernelSpec& kernel, double p, int n,
                                             int m_ref, std::size_t replicas, const Execution& ex = {},
                                             double z = 3.0);

struct SchrammQuenchedReport {
  int n = 0;
  int m_ref = 0;
  double p = 0.0;
  EstimateWithCI mean_log_tau;  // (1/n) E log tau_p(X_0, X_n)
  double reference = 0.0;       // -H_m / m
  double log_bias = 0.0;        // (1/n) sum_d P(d) (se_d / tau_d)^2 / 2
  double bias_tolerance = 0.0;
  bool holds = false;
  bool has_exact = false;       // single tree: log p E|X_n| / n
  double exact = 0.0;
  bool exact_agrees = false;
  std::vector<ClassTau> classes;
};
SchrammQuenchedReport schramm_quenched_check(const ProductBall& ball, const KernelSpec& kernel, double p, int n,
                                             int m_ref, std::size_t replicas, const Execution& ex = {},
                                             double bias_tolerance = 0.01, double z = 3.0);

}  // namespace treelab
