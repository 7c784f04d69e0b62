#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace treelab {

enum class CiMethod { wilson, normal, batch_means, exact, bracket };

std::string_view to_string(CiMethod m) noexcept;

struct EstimateWithCI {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_replicas = 0;
  CiMethod method = CiMethod::normal;

  // Interval at z standard errors (Wilson score interval for wilson; the
  // bracket itself, independent of z, for bracket).
  std::pair<double, double> interval(double z) const;
  bool contains(double value, double z) const;
  // True unless the estimate exceeds `bound` by more than z standard errors.
  bool below_bound(double bound, double z) const { return interval(z).first <= bound; }
  // True unless the estimate falls short of `bound` by more than z standard errors.
  bool above_bound(double bound, double z) const { return interval(z).second >= bound; }
};

EstimateWithCI exact_estimate(double value);

// In-order Neumaier summation; the order is part of the determinism contract.
double ordered_sum(std::span<const double> values);

EstimateWithCI wilson_estimate(std::size_t successes, std::size_t n);
EstimateWithCI normal_estimate(std::span<const double> samples);
// Batch means over contiguous batches (extra samples go to the last batch).
EstimateWithCI batch_means_estimate(std::span<const double> samples, std::size_t batches);
// Pools batch means of several independent chains into one estimate.
EstimateWithCI pooled_batch_means(std::span<const std::vector<double>> chains, std::size_t batches_per_chain);

// Mean and standard error of sum(a)/sum(b) from paired replica samples
// (delta method), method normal.
EstimateWithCI ratio_estimate(std::span<const double> numer, std::span<const double> denom);

struct LinearFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
  double intercept_stderr = 0.0;
  std::size_t points = 0;
};

// Weighted least squares y = a + b x with per-point standard errors sy
// (sy empty or all zero => ordinary least squares with residual variance).
LinearFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> sy = {});

}  // namespace treelab
