#include <atomic>
#include <cstdlib>
#include <string>

#include "treelab/errors.hpp"
#include "treelab/simd/kernels.hpp"

namespace treelab::simd {

namespace {

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> slot{detected_isa()};
  return slot;
}

const detail::KernelTable& table() noexcept {
  if (active_isa() == Isa::avx2) return *detail::avx2_table();
  return detail::scalar_table();
}

}  // namespace

std::string_view to_string(Isa isa) noexcept { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) noexcept {
  if (isa == Isa::scalar) return true;
  return detail::avx2_table() != nullptr && cpu_has_avx2();
}

Isa detected_isa() noexcept {
  if (const char* env = std::getenv("TREELAB_SIMD"); env != nullptr && std::string(env) == "scalar")
    return Isa::scalar;
  return isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

Isa active_isa() noexcept { return active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_available(isa))
    throw Error(ErrorKind::InvalidArgument, "ISA " + std::string(to_string(isa)) + " not available on this host");
  active_slot().store(isa, std::memory_order_relaxed);
}

void bernoulli_mask(std::span<const std::uint64_t> words, std::uint64_t threshold, bool all,
                    std::span<std::uint64_t> bits) {
  if (bits.size() != (words.size() + 63) / 64)
    throw Error(ErrorKind::InvalidArgument, "bernoulli_mask output has wrong length");
  table().bernoulli_mask(words.data(), words.size(), threshold, all, bits.data());
}

void axpy2(std::span<double> dst, double a, std::span<const double> x, double b, std::span<const double> y) {
  if (x.size() != dst.size() || y.size() != dst.size())
    throw Error(ErrorKind::InvalidArgument, "axpy2 length mismatch");
  table().axpy2(dst.data(), a, x.data(), b, y.data(), dst.size());
}

void scale(std::span<double> dst, double a, std::span<const double> x) {
  if (x.size() != dst.size()) throw Error(ErrorKind::InvalidArgument, "scale length mismatch");
  table().scale(dst.data(), a, x.data(), dst.size());
}

double lane_sum(std::span<const double> x) { return table().lane_sum(x.data(), x.size()); }

double max_product(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::InvalidArgument, "max_product length mismatch");
  return table().max_product(x.data(), y.data(), x.size());
}

}  // namespace treelab::simd
