#include "treelab/rng.hpp"

#include <cmath>

namespace treelab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline PhiloxKey split(std::uint64_t v) noexcept {
  return {static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(v >> 32)};
}

inline std::uint64_t join(std::uint32_t lo, std::uint32_t hi) noexcept {
  return static_cast<std::uint64_t>(lo) | (static_cast<std::uint64_t>(hi) << 32);
}

PhiloxKey derive_key(std::uint64_t master, std::uint64_t tag) noexcept {
  return split(mix64(master ^ mix64(tag ^ 0x5452454c4142ull)));
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter c, PhiloxKey k) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

ReplicaStream::ReplicaStream(std::uint64_t master, std::uint64_t replica, std::uint64_t tag) noexcept
    : master_(master), replica_(replica), tag_(tag), key_(derive_key(master, tag)) {}

ReplicaStream ReplicaStream::substream(std::uint64_t tag) const noexcept {
  return ReplicaStream(master_, replica_, mix64(tag_) ^ tag);
}

std::uint64_t ReplicaStream::keyed_word(std::uint64_t key) const noexcept {
  const auto r = philox4x32_10({static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                                static_cast<std::uint32_t>(replica_), static_cast<std::uint32_t>(replica_ >> 32)},
                               key_);
  return join(r[0], r[1]);
}

ReplicaStream seed_stream(std::uint64_t master, std::uint64_t replica) noexcept {
  return ReplicaStream(master, replica, 0);
}

Generator::Generator(const ReplicaStream& stream) noexcept
    : key_(stream.substream(tags::sequential).philox_key()), replica_(stream.replica()) {}

void Generator::refill() noexcept {
  const auto r = philox4x32_10({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                static_cast<std::uint32_t>(replica_), static_cast<std::uint32_t>(replica_ >> 32)},
                               key_);
  ++block_;
  buf_ = {join(r[0], r[1]), join(r[2], r[3])};
  pos_ = 0;
}

void Generator::fill(std::span<std::uint64_t> out) noexcept {
  for (auto& w : out) w = (*this)();
}

std::uint64_t Generator::below(std::uint64_t bound) noexcept {
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = (*this)();
  __uint128_t m = static_cast<__uint128_t>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t t = (0 - bound) % bound;
    while (low < t) {
      x = (*this)();
      m = static_cast<__uint128_t>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

BernoulliRule BernoulliRule::for_probability(double p) noexcept {
  if (!(p > 0.0)) return {0, false};
  if (p >= 1.0) return {0, true};
  return {static_cast<std::uint64_t>(std::ldexp(p, 64)), false};
}

}  // namespace treelab
