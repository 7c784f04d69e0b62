#pragma once

// Counter-based random streams. Every random word used anywhere in the
// library is a Philox4x32-10 block addressed by (master seed, purpose tag,
// replica index, counter), so results never depend on scheduling.

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace treelab {

// Identity string embedded in every JSON summary.
inline constexpr std::string_view kGeneratorId = "philox4x32-10 keyed by (master, tag), counter (key, replica)";

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr double to_unit(std::uint64_t w) noexcept { return static_cast<double>(w >> 11) * 0x1.0p-53; }

// Purpose tags. Distinct tags give unrelated Philox keys.
namespace tags {
inline constexpr std::uint64_t percolation = 0x7065726301ull;
inline constexpr std::uint64_t percolation_2 = 0x7065726302ull;
inline constexpr std::uint64_t percolation_3 = 0x7065726303ull;
inline constexpr std::uint64_t walk = 0x77616c6b01ull;
inline constexpr std::uint64_t chain = 0x636861696eull;
inline constexpr std::uint64_t chain_2 = 0x636861696full;
inline constexpr std::uint64_t protocol = 0x70726f746full;
inline constexpr std::uint64_t sequential = 0x7365710001ull;
}  // namespace tags

class ReplicaStream {
 public:
  ReplicaStream() = default;
  ReplicaStream(std::uint64_t master, std::uint64_t replica, std::uint64_t tag = 0) noexcept;

  ReplicaStream substream(std::uint64_t tag) const noexcept;

  // Random word addressed by a 64-bit key (e.g. an edge key); the same key
  // always yields the same word within this stream.
  std::uint64_t keyed_word(std::uint64_t key) const noexcept;

  std::uint64_t master() const noexcept { return master_; }
  std::uint64_t replica() const noexcept { return replica_; }
  std::uint64_t tag() const noexcept { return tag_; }
  PhiloxKey philox_key() const noexcept { return key_; }

 private:
  std::uint64_t master_ = 0;
  std::uint64_t replica_ = 0;
  std::uint64_t tag_ = 0;
  PhiloxKey key_{};
};

ReplicaStream seed_stream(std::uint64_t master, std::uint64_t replica) noexcept;

// Sequential generator over a stream (counter mode), satisfying
// UniformRandomBitGenerator.
class Generator {
 public:
  using result_type = std::uint64_t;

  explicit Generator(const ReplicaStream& stream) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (pos_ == 2) refill();
    return buf_[pos_++];
  }
  double uniform() noexcept { return to_unit((*this)()); }
  void fill(std::span<std::uint64_t> out) noexcept;
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  void refill() noexcept;

  PhiloxKey key_{};
  std::uint64_t replica_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buf_{};
  int pos_ = 2;
};

// Edge/bond retention rule: open iff word < threshold. Monotone in p, so the
// same words realize the standard monotone coupling across p.
struct BernoulliRule {
  std::uint64_t threshold = 0;
  bool all = false;

  static BernoulliRule for_probability(double p) noexcept;
  bool operator()(std::uint64_t word) const noexcept { return all || word < threshold; }
};

}  // namespace treelab
