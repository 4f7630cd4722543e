#pragma once
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace cit {

/// Philox4x32-10 counter-based generator: a pure function of (key, counter),
/// so any stream element can be produced in any order on any thread.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t(M0) * ctr[0];
    const std::uint64_t p1 = std::uint64_t(M1) * ctr[2];
    ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1), std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1],
           std::uint32_t(p0)};
    key[0] += W0;
    key[1] += W1;
  }
  return ctr;
}

/// Identifies one draw: seed, a stream id (e.g. an encoded wavenumber),
/// a lane (polarization and real/imaginary part) and a step.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;
  std::uint32_t lane = 0;
  std::uint32_t step = 0;
  std::uint32_t tag = 0;
};

/// Uniform in (0, 1) from 53 random bits.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t(hi) << 21) ^ (std::uint64_t(lo) >> 11);
  return (static_cast<double>(bits & ((1ULL << 53) - 1)) + 0.5) / 9007199254740992.0;
}

/// Standard normal draw by Box-Muller on one Philox block.
inline double normal_draw(const StreamKey& k) {
  const auto r = philox4x32({k.step, k.stream, k.lane, k.tag},
                            {std::uint32_t(k.seed), std::uint32_t(k.seed >> 32)});
  const double u1 = to_unit(r[0], r[1]);
  const double u2 = to_unit(r[2], r[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double uniform_draw(const StreamKey& k) {
  const auto r = philox4x32({k.step, k.stream, k.lane, k.tag},
                            {std::uint32_t(k.seed), std::uint32_t(k.seed >> 32)});
  return to_unit(r[0], r[1]);
}

}  // namespace cit
