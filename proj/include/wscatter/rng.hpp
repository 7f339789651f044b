#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

// Philox4x32-10 counter-based generator (Salmon, Moraes, Dror, Shaw, SC'11).
// A stream is a pure function of (key, counter), so sample i of a run can be
// regenerated anywhere, in any order, on any thread.

namespace wscatter::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

namespace detail {

inline constexpr std::uint32_t kMulA = 0xD2511F53u;
inline constexpr std::uint32_t kMulB = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeylA = 0x9E3779B9u;
inline constexpr std::uint32_t kWeylB = 0xBB67AE85u;

constexpr void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

constexpr Counter round(const Counter& x, const Key& k) {
  std::uint32_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
  mulhilo(kMulA, x[0], hi0, lo0);
  mulhilo(kMulB, x[2], hi1, lo1);
  return {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
}

}  // namespace detail

constexpr Counter philox4x32_10(Counter ctr, Key key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += detail::kWeylA;
      key[1] += detail::kWeylB;
    }
    ctr = detail::round(ctr, key);
  }
  return ctr;
}

/// Stream identifiers keep draws for different purposes independent even
/// when seed and sample index coincide.
enum class Domain : std::uint32_t {
  Scatter = 1,
  Volume = 2,
  Core = 3,
  Nondegeneracy = 4,
  Test = 0xFFFFu,
};

/// Sequential draws for one (seed, sample index) pair.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t index, Domain domain = Domain::Scatter)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        ctr_{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0u,
             static_cast<std::uint32_t>(domain)} {}

  std::uint32_t next_u32() {
    if (pos_ == 4) {
      block_ = philox4x32_10(ctr_, key_);
      ++ctr_[2];
      pos_ = 0;
    }
    return block_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_open0()));
    const double phi = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

 private:
  Key key_;
  Counter ctr_;
  Counter block_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace wscatter::rng
