#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace modalreg {

// Philox4x32-10 counter-based generator. Each (seed, stream) pair owns an
// independent sequence, so replication r of a study draws from stream r no
// matter which thread runs it.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using block = std::array<std::uint32_t, 4>;
  using key_type = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        counter_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (used_ == 4) {
      buffer_ = bijection(counter_, key_);
      if (++counter_[0] == 0) ++counter_[1];
      used_ = 0;
    }
    return buffer_[used_++];
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    const std::uint64_t a = (*this)() >> 5;
    const std::uint64_t b = (*this)() >> 6;
    return (static_cast<double>(a) * 67108864.0 + static_cast<double>(b)) * (1.0 / 9007199254740992.0);
  }

  // The raw ten-round Philox bijection.
  static block bijection(block ctr, key_type key) noexcept {
    constexpr std::uint64_t m0 = 0xD2511F53u;
    constexpr std::uint64_t m1 = 0xCD9E8D57u;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = m0 * ctr[0];
      const std::uint64_t p1 = m1 * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  key_type key_;
  block counter_;
  block buffer_{};
  int used_ = 4;
};

// Standard normal draw by the Box-Muller transform (the sine branch is
// discarded to keep draws independent of call history).
inline double standard_normal(Philox4x32& rng) noexcept {
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925 * u2);
}

}  // namespace modalreg
