// Compiled with -mavx2 (and nothing implying FMA); only reached after a
// runtime CPU check.
#include "treelab/simd/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>

#include <algorithm>

namespace treelab::simd::detail {

namespace {

// Unsigned 64-bit a < b via signed compare on sign-flipped operands.
inline unsigned lt_mask4(const std::uint64_t* w, __m256i thr_flipped) {
  const __m256i sign = _mm256_set1_epi64x(static_cast<long long>(0x8000000000000000ull));
  const __m256i v = _mm256_xor_si256(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(w)), sign);
  const __m256i lt = _mm256_cmpgt_epi64(thr_flipped, v);
  return static_cast<unsigned>(_mm256_movemask_pd(_mm256_castsi256_pd(lt)));
}

void bernoulli_mask_avx2(const std::uint64_t* words, std::size_t n, std::uint64_t threshold, bool all,
                         std::uint64_t* bits) {
  const std::size_t full = n / 64;
  if (all) {
    for (std::size_t j = 0; j < full; ++j) bits[j] = ~std::uint64_t{0};
  } else {
    const __m256i thr = _mm256_set1_epi64x(static_cast<long long>(threshold ^ 0x8000000000000000ull));
    for (std::size_t j = 0; j < full; ++j) {
      std::uint64_t m = 0;
      const std::uint64_t* w = words + 64 * j;
      for (unsigned q = 0; q < 16; ++q) m |= static_cast<std::uint64_t>(lt_mask4(w + 4 * q, thr)) << (4 * q);
      bits[j] = m;
    }
  }
  if (const std::size_t rest = n % 64; rest != 0) {
    std::uint64_t m = 0;
    for (unsigned b = 0; b < rest; ++b) m |= static_cast<std::uint64_t>(all || words[64 * full + b] < threshold) << b;
    bits[full] = m;
  }
}

void axpy2_avx2(double* dst, double a, const double* x, double b, const double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d ax = _mm256_mul_pd(va, _mm256_loadu_pd(x + j));
    const __m256d by = _mm256_mul_pd(vb, _mm256_loadu_pd(y + j));
    _mm256_storeu_pd(dst + j, _mm256_add_pd(_mm256_loadu_pd(dst + j), _mm256_add_pd(ax, by)));
  }
  for (; j < n; ++j) {
    const double ax = a * x[j];
    const double by = b * y[j];
    dst[j] = dst[j] + (ax + by);
  }
}

void scale_avx2(double* dst, double a, const double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) _mm256_storeu_pd(dst + j, _mm256_mul_pd(va, _mm256_loadu_pd(x + j)));
  for (; j < n; ++j) dst[j] = a * x[j];
}

double lane_sum_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t full = n / 4 * 4;
  for (std::size_t i = 0; i < full; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = full; i < n; ++i) s += x[i];
  return s;
}

double max_product_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) acc = _mm256_max_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + j), _mm256_loadu_pd(y + j)));
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  double m = std::max(std::max(lane[0], lane[1]), std::max(lane[2], lane[3]));
  for (; j < n; ++j) m = std::max(m, x[j] * y[j]);
  return m;
}

constexpr KernelTable kAvx2{bernoulli_mask_avx2, axpy2_avx2, scale_avx2, lane_sum_avx2, max_product_avx2};

}  // namespace

const KernelTable* avx2_table() noexcept { return &kAvx2; }

}  // namespace treelab::simd::detail

#else

namespace treelab::simd::detail {
const KernelTable* avx2_table() noexcept { return nullptr; }
}  // namespace treelab::simd::detail

#endif
