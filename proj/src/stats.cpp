#include "treelab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "treelab/errors.hpp"

namespace treelab {

std::string_view to_string(CiMethod m) noexcept {
  switch (m) {
    case CiMethod::wilson: return "wilson";
    case CiMethod::normal: return "normal";
    case CiMethod::batch_means: return "batch-means";
    case CiMethod::exact: return "exact";
    case CiMethod::bracket: return "bracket";
  }
  return "unknown";
}

std::pair<double, double> EstimateWithCI::interval(double z) const {
  if (method == CiMethod::wilson && n_replicas > 0) {
    const double n = static_cast<double>(n_replicas);
    const double p = mean;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(std::max(0.0, p * (1.0 - p) / n + z2 / (4.0 * n * n)));
    // The score interval reaches the boundary exactly when p is 0 or 1.
    return {p <= 0.0 ? 0.0 : std::max(0.0, center - half), p >= 1.0 ? 1.0 : std::min(1.0, center + half)};
  }
  if (method == CiMethod::bracket) return {mean - std_error, mean + std_error};
  return {mean - z * std_error, mean + z * std_error};
}

bool EstimateWithCI::contains(double value, double z) const {
  const auto [lo, hi] = interval(z);
  return lo <= value && value <= hi;
}

EstimateWithCI exact_estimate(double value) { return {value, 0.0, 1, CiMethod::exact}; }

double ordered_sum(std::span<const double> values) {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::fabs(sum) >= std::fabs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

EstimateWithCI wilson_estimate(std::size_t successes, std::size_t n) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "estimate needs at least one replica");
  const double p = static_cast<double>(successes) / static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), n, CiMethod::wilson};
}

EstimateWithCI normal_estimate(std::span<const double> samples) {
  if (samples.empty()) throw Error(ErrorKind::InvalidArgument, "estimate needs at least one replica");
  const double n = static_cast<double>(samples.size());
  const double mean = ordered_sum(samples) / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double var = samples.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n), samples.size(), CiMethod::normal};
}

namespace {
std::vector<double> batch_values(std::span<const double> samples, std::size_t batches) {
  if (batches == 0 || samples.size() < batches)
    throw Error(ErrorKind::InvalidArgument, "batch means needs at least one sample per batch");
  const std::size_t size = samples.size() / batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t begin = b * size;
    const std::size_t end = b + 1 == batches ? samples.size() : begin + size;
    means.push_back(ordered_sum(samples.subspan(begin, end - begin)) / static_cast<double>(end - begin));
  }
  return means;
}
}  // namespace

EstimateWithCI batch_means_estimate(std::span<const double> samples, std::size_t batches) {
  auto est = normal_estimate(batch_values(samples, batches));
  est.mean = ordered_sum(samples) / static_cast<double>(samples.size());
  est.n_replicas = samples.size();
  est.method = CiMethod::batch_means;
  return est;
}

EstimateWithCI pooled_batch_means(std::span<const std::vector<double>> chains, std::size_t batches_per_chain) {
  std::vector<double> means;
  std::size_t total = 0;
  for (const auto& c : chains) {
    const auto b = batch_values(c, batches_per_chain);
    means.insert(means.end(), b.begin(), b.end());
    total += c.size();
  }
  auto est = normal_estimate(means);
  est.n_replicas = total;
  est.method = CiMethod::batch_means;
  return est;
}

EstimateWithCI ratio_estimate(std::span<const double> numer, std::span<const double> denom) {
  if (numer.size() != denom.size() || numer.empty())
    throw Error(ErrorKind::InvalidArgument, "ratio estimate needs paired, nonempty samples");
  const double n = static_cast<double>(numer.size());
  const double a = ordered_sum(numer) / n;
  const double b = ordered_sum(denom) / n;
  if (!(b > 0.0)) throw Error(ErrorKind::InsufficientPrecision, "ratio estimate with zero denominator");
  const double r = a / b;
  std::vector<double> lin(numer.size());
  for (std::size_t i = 0; i < lin.size(); ++i) lin[i] = numer[i] - r * denom[i];
  const auto e = normal_estimate(lin);
  return {r, e.std_error / b, numer.size(), CiMethod::normal};
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> sy) {
  const std::size_t n = x.size();
  if (y.size() != n || n < 2) throw Error(ErrorKind::InvalidArgument, "line fit needs at least two points");
  const bool weighted = !sy.empty() && std::all_of(sy.begin(), sy.end(), [](double s) { return s > 0.0; });
  if (!sy.empty() && sy.size() != n) throw Error(ErrorKind::InvalidArgument, "line fit weight count");
  double sw = 0, sx = 0, syy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weighted ? 1.0 / (sy[i] * sy[i]) : 1.0;
    sw += w;
    sx += w * x[i];
    syy += w * y[i];
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * y[i];
  }
  const double det = sw * sxx - sx * sx;
  if (!(std::fabs(det) > 0.0)) throw Error(ErrorKind::InvalidArgument, "degenerate abscissae in line fit");
  LinearFit fit;
  fit.points = n;
  fit.slope = (sw * sxy - sx * syy) / det;
  fit.intercept = (sxx * syy - sx * sxy) / det;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weighted ? 1.0 / (sy[i] * sy[i]) : 1.0;
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    chi2 += w * r * r;
  }
  const double dof = n > 2 ? static_cast<double>(n - 2) : 1.0;
  // Weighted fits inflate by the reduced chi^2 when it exceeds 1.
  const double scale = weighted ? std::max(1.0, chi2 / dof) : chi2 / dof;
  fit.slope_stderr = std::sqrt(scale * sw / det);
  fit.intercept_stderr = std::sqrt(scale * sxx / det);
  return fit;
}

}  // namespace treelab
