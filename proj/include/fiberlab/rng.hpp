#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>

#include "fiberlab/geometry.hpp"

namespace fiberlab {

// Philox4x32-10 counter-based generator. Each (key, counter) pair maps to an
// independent 128-bit random block, so particle p at step s can draw its noise
// as block(seed, s, p) regardless of evaluation order or thread count.
struct Philox4x32 {
  static std::array<std::uint32_t, 4> block(std::uint64_t key, std::uint64_t ctr_hi,
                                            std::uint64_t ctr_lo) noexcept {
    constexpr std::uint32_t m0 = 0xD2511F53u;
    constexpr std::uint32_t m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u;
    constexpr std::uint32_t w1 = 0xBB67AE85u;

    std::uint32_t c0 = static_cast<std::uint32_t>(ctr_lo);
    std::uint32_t c1 = static_cast<std::uint32_t>(ctr_lo >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(ctr_hi);
    std::uint32_t c3 = static_cast<std::uint32_t>(ctr_hi >> 32);
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);

    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = static_cast<std::uint64_t>(m0) * c0;
      std::uint64_t p1 = static_cast<std::uint64_t>(m1) * c2;
      std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      std::uint32_t n0 = hi1 ^ c1 ^ k0;
      std::uint32_t n1 = lo1;
      std::uint32_t n2 = hi0 ^ c3 ^ k1;
      std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += w0;
      k1 += w1;
    }
    return {c0, c1, c2, c3};
  }
};

// Two uniforms in the open interval (0,1) from one Philox block.
inline std::pair<double, double> counter_uniform2(std::uint64_t key, std::uint64_t ctr_hi,
                                                  std::uint64_t ctr_lo) noexcept {
  auto r = Philox4x32::block(key, ctr_hi, ctr_lo);
  std::uint64_t a = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
  std::uint64_t b = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
  double u = (static_cast<double>(a >> 11) + 0.5) * 0x1p-53;
  double v = (static_cast<double>(b >> 11) + 0.5) * 0x1p-53;
  return {u, v};
}

// Standard normal pair (Box-Muller) from one counter block.
inline std::pair<double, double> counter_normal2(std::uint64_t key, std::uint64_t ctr_hi,
                                                 std::uint64_t ctr_lo) noexcept {
  auto [u, v] = counter_uniform2(key, ctr_hi, ctr_lo);
  double r = std::sqrt(-2.0 * std::log(u));
  return {r * std::cos(two_pi * v), r * std::sin(two_pi * v)};
}

inline double counter_normal(std::uint64_t key, std::uint64_t ctr_hi,
                             std::uint64_t ctr_lo) noexcept {
  return counter_normal2(key, ctr_hi, ctr_lo).first;
}

}  // namespace fiberlab
