#include "treelab/simd/kernels.hpp"

#include <algorithm>

namespace treelab::simd::detail {

namespace {

void bernoulli_mask_scalar(const std::uint64_t* words, std::size_t n, std::uint64_t threshold, bool all,
                           std::uint64_t* bits) {
  const std::size_t full = n / 64;
  for (std::size_t j = 0; j < full; ++j) {
    std::uint64_t m = 0;
    for (unsigned b = 0; b < 64; ++b) m |= static_cast<std::uint64_t>(all || words[64 * j + b] < threshold) << b;
    bits[j] = m;
  }
  if (const std::size_t rest = n % 64; rest != 0) {
    std::uint64_t m = 0;
    for (unsigned b = 0; b < rest; ++b) m |= static_cast<std::uint64_t>(all || words[64 * full + b] < threshold) << b;
    bits[full] = m;
  }
}

void axpy2_scalar(double* dst, double a, const double* x, double b, const double* y, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double ax = a * x[j];
    const double by = b * y[j];
    dst[j] = dst[j] + (ax + by);
  }
}

void scale_scalar(double* dst, double a, const double* x, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) dst[j] = a * x[j];
}

double lane_sum_scalar(const double* x, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t full = n / 4 * 4;
  for (std::size_t i = 0; i < full; i += 4)
    for (int l = 0; l < 4; ++l) lane[l] += x[i + static_cast<std::size_t>(l)];
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = full; i < n; ++i) s += x[i];
  return s;
}

double max_product_scalar(const double* x, const double* y, std::size_t n) {
  double m = 0.0;
  for (std::size_t j = 0; j < n; ++j) m = std::max(m, x[j] * y[j]);
  return m;
}

constexpr KernelTable kScalar{bernoulli_mask_scalar, axpy2_scalar, scale_scalar, lane_sum_scalar,
                              max_product_scalar};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

}  // namespace treelab::simd::detail
