#pragma once

// Data-parallel inner loops with a scalar reference and an AVX2 variant
// picked at runtime. Every variant must be bit-identical to the scalar
// reference (no FMA contraction, reductions fixed to four interleaved lanes),
// so artifact bytes never depend on the host ISA.

#include <cstdint>
#include <span>
#include <string_view>

namespace treelab::simd {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa) noexcept;

// Best ISA the host supports, unless TREELAB_SIMD=scalar is set.
Isa detected_isa() noexcept;
bool isa_available(Isa isa) noexcept;

// Kernel dispatch currently in effect; tests pin it with IsaScope.
Isa active_isa() noexcept;
void set_active_isa(Isa isa);

class IsaScope {
 public:
  explicit IsaScope(Isa isa) : saved_(active_isa()) { set_active_isa(isa); }
  ~IsaScope() { set_active_isa(saved_); }
  IsaScope(const IsaScope&) = delete;
  IsaScope& operator=(const IsaScope&) = delete;

 private:
  Isa saved_;
};

// bits[j] bit b is set iff words[64 j + b] < threshold (or `all`). The
// trailing partial word is zero-padded. bits.size() == ceil(words.size()/64).
void bernoulli_mask(std::span<const std::uint64_t> words, std::uint64_t threshold, bool all,
                    std::span<std::uint64_t> bits);

// dst[j] += (a * x[j] + b * y[j]), evaluated exactly in that order.
void axpy2(std::span<double> dst, double a, std::span<const double> x, double b, std::span<const double> y);

// dst[j] = a * x[j]
void scale(std::span<double> dst, double a, std::span<const double> x);

// Four-lane interleaved sum: lane l accumulates x[4i + l], lanes combined as
// (l0 + l1) + (l2 + l3), then the tail is added in order.
double lane_sum(std::span<const double> x);

// max_j x[j] * y[j] (0 for empty input).
double max_product(std::span<const double> x, std::span<const double> y);

namespace detail {

struct KernelTable {
  void (*bernoulli_mask)(const std::uint64_t*, std::size_t, std::uint64_t, bool, std::uint64_t*);
  void (*axpy2)(double*, double, const double*, double, const double*, std::size_t);
  void (*scale)(double*, double, const double*, std::size_t);
  double (*lane_sum)(const double*, std::size_t);
  double (*max_product)(const double*, const double*, std::size_t);
};

const KernelTable& scalar_table() noexcept;
const KernelTable* avx2_table() noexcept;  // nullptr when not compiled in

}  // namespace detail

}  // namespace treelab::simd
