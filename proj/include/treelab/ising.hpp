#pragma once

// Ising model through its q = 2 random-cluster representation, sampled with
// Swendsen-Wang dynamics. Weights are exp(beta sum_{uv} s_u s_v + h sum_v s_v);
// bonds open with p = 1 - exp(-2 beta) and, for h > 0, every vertex couples
// to a ghost vertex with p_g = 1 - exp(-2 h). All measurements read the FK
// configuration: <s_x s_y> = P(x <-> y), <s_0> = P(0 <-> ghost).

#include <cstdint>
#include <span>
#include <vector>

#include "treelab/parallel.hpp"
#include "treelab/percolation.hpp"
#include "treelab/product_graph.hpp"
#include "treelab/rng.hpp"
#include "treelab/stats.hpp"

namespace treelab {

struct IsingParams {
  double beta = 0.0;
  double h = 0.0;
  std::size_t samples = 3000;  // measurements per chain
  std::size_t burn_in = 1000;
  std::size_t thinning = 10;
  std::size_t chains = 4;
  std::size_t batches = 30;  // total over all chains

  std::size_t sweeps_per_chain() const noexcept { return burn_in + samples * thinning; }
  std::size_t total_sweeps() const noexcept { return chains * sweeps_per_chain(); }
};

void validate(const IsingParams& params);

struct FKState {
  std::vector<std::int8_t> spin;
  std::vector<std::uint64_t> open_bits;    // one bit per graph edge
  std::vector<std::uint64_t> ghost_bits;   // one bit per vertex (h > 0)
  ClusterForest forest;                    // vertex_count + 1 sites; the last is the ghost
  VertexId ghost = 0;
  std::uint64_t sweeps = 0;

  bool has_ghost_bond(VertexId v) const noexcept { return (ghost_bits[v >> 6] >> (v & 63)) & 1u; }
  bool bond_open(EdgeId e) const noexcept { return (open_bits[e >> 6] >> (e & 63)) & 1u; }
  bool connected(VertexId a, VertexId b) noexcept { return forest.connected(a, b); }
};

// Random initial spins.
FKState make_fk_state(const Graph& g, Generator& gen);

// One Swendsen-Wang update: bonds between agreeing spins (and ghost bonds of
// + spins) are opened, clusters are formed, and each cluster takes a fresh
// uniform sign (the ghost cluster stays +). The forest describes the FK
// configuration drawn in this sweep.
void sw_sweep(FKState& state, const Graph& g, double beta, double h, Generator& gen);

// Chain samples of a measurement, one vector per chain (chain c is seeded
// from replica c of the master seed).
using FKMeasure = std::function<double(FKState&)>;
std::vector<std::vector<double>> run_fk_chains(const Graph& g, const IsingParams& params, const Execution& ex,
                                               const FKMeasure& measure, std::uint64_t tag = tags::chain);

EstimateWithCI estimate_two_point(const Graph& g, VertexId x, VertexId y, const IsingParams& params,
                                  const Execution& ex = {});
EstimateWithCI estimate_susceptibility(const Graph& g, VertexId x, const IsingParams& params,
                                       const Execution& ex = {});
// Two independent chains; statistic |C_1(x) & C_2(x)|.
EstimateWithCI estimate_bubble(const Graph& g, VertexId x, const IsingParams& params, const Execution& ex = {});
EstimateWithCI estimate_magnetization(const Graph& g, VertexId x, const IsingParams& params,
                                      const Execution& ex = {});

// Connection probabilities from x to many targets from one set of chains.
std::vector<EstimateWithCI> estimate_two_point_many(const Graph& g, VertexId x, std::span<const VertexId> targets,
                                                    const IsingParams& params, const Execution& ex = {});

struct BetacProtocol {
  std::vector<int> radii;  // ladder R, R+2, R+4
  std::size_t samples = 2000;
  std::size_t max_samples = 32000;
  double tolerance = 0.003;  // in tanh(beta)
  double z = 2.5;
  double lo = -1.0;  // tanh(beta) bracket; default 0.5 / (K - 1)
  double hi = -1.0;  // default min(0.99, 1.5 / (K - 1))
};
struct BetacEstimate {
  EstimateWithCI estimate;  // beta, method bracket
  double tanh_lo = 0.0;
  double tanh_hi = 0.0;
  FlatnessResult search;  // abscissa is tanh(beta)
};
// `chain` supplies burn-in, thinning, chains and batches; samples come from the protocol.
BetacEstimate estimate_betac(const ProductSpec& trees, const BetacProtocol& protocol, const IsingParams& chain,
                             const Execution& ex = {});

struct PowerLawFit {
  std::vector<double> distance;  // |control - critical|
  std::vector<EstimateWithCI> values;
  LinearFit fit;  // log value against log distance
};
PowerLawFit fit_power_law(std::span<const double> distance, std::span<const EstimateWithCI> values);

// Log-log slope of chi against beta_c - beta over the given offsets.
PowerLawFit susceptibility_exponent(const Graph& g, VertexId x, double betac, std::span<const double> offsets,
                                    const IsingParams& params, const Execution& ex = {});
// Log-log slope of M against h at beta.
PowerLawFit field_exponent(const Graph& g, VertexId x, double beta, std::span<const double> fields,
                           const IsingParams& params, const Execution& ex = {});
// Log-log slope of M(beta_c + t, h) against t at a small fixed field.
PowerLawFit spontaneous_exponent(const Graph& g, VertexId x, double betac, std::span<const double> offsets,
                                 double h, const IsingParams& params, const Execution& ex = {});
// The same slope for the infinite k-regular tree from its closed form.
PowerLawFit tree_susceptibility_exponent(int k, std::span<const double> offsets);

}  // namespace treelab
