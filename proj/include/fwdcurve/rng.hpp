#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace fwdcurve {

/// Counter-based pseudo-random numbers (Philox 4x32, 10 rounds).
///
/// Every draw is a pure function of (master_seed, path_id, step, slot), so
/// ensembles are reproducible independently of scheduling order: any worker
/// may compute any path at any time and the numbers do not change.  This is
/// what makes byte-identical output under different worker counts possible.
namespace philox {

struct Block {
  std::array<std::uint32_t, 4> ctr;
  std::array<std::uint32_t, 2> key;
};

inline std::array<std::uint32_t, 4> round10(std::array<std::uint32_t, 4> x,
                                            std::array<std::uint32_t, 2> k) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int r = 0; r < 10; ++r) {
    const std::uint64_t p0 = std::uint64_t(kMul0) * x[0];
    const std::uint64_t p1 = std::uint64_t(kMul1) * x[2];
    x = {std::uint32_t(p1 >> 32) ^ x[1] ^ k[0], std::uint32_t(p1),
         std::uint32_t(p0 >> 32) ^ x[3] ^ k[1], std::uint32_t(p0)};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return x;
}

}  // namespace philox

/// Identifies an independent stream of Gaussians within an ensemble run.
/// `purpose` separates logically distinct consumers that share the same
/// (path, step) coordinates, e.g. curve-level increments vs. the driver of an
/// independently simulated scalar equation.
struct NoiseStream {
  std::uint64_t master_seed = 0;
  std::uint64_t path_id = 0;
  std::uint64_t step = 0;
  std::uint8_t purpose = 0;

  static constexpr std::uint8_t kPurposeIncrement = 0;
  static constexpr std::uint8_t kPurposeScalar = 1;

  /// Standard normal draw for slot `j` of this stream (Box-Muller on two
  /// 53-bit uniforms from one Philox block).  Deterministic and stateless.
  double normal(std::uint32_t j) const {
    const std::array<std::uint32_t, 4> ctr = {
        std::uint32_t(path_id), std::uint32_t(path_id >> 32),
        std::uint32_t(step),
        (j & 0x00FFFFFFu) | (std::uint32_t(purpose) << 24)};
    const std::array<std::uint32_t, 2> key = {std::uint32_t(master_seed),
                                              std::uint32_t(master_seed >> 32)};
    const auto out = philox::round10(ctr, key);
    const std::uint64_t a =
        (std::uint64_t(out[0]) << 32) | std::uint64_t(out[1]);
    const std::uint64_t b =
        (std::uint64_t(out[2]) << 32) | std::uint64_t(out[3]);
    // u1 in (0,1], u2 in (0,1); log(u1) is finite for every block.
    const double u1 = double((a >> 11) + 1) * 0x1.0p-53;
    const double u2 = (double(b >> 11) + 0.5) * 0x1.0p-53;
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  /// Uniform draw in [0,1) for slot `j`; used by test helpers.
  double uniform(std::uint32_t j) const {
    const std::array<std::uint32_t, 4> ctr = {
        std::uint32_t(path_id), std::uint32_t(path_id >> 32),
        std::uint32_t(step),
        (j & 0x00FFFFFFu) | (std::uint32_t(purpose) << 24) | 0x80000000u};
    const std::array<std::uint32_t, 2> key = {std::uint32_t(master_seed),
                                              std::uint32_t(master_seed >> 32)};
    const auto out = philox::round10(ctr, key);
    const std::uint64_t a =
        (std::uint64_t(out[0]) << 32) | std::uint64_t(out[1]);
    return double(a >> 11) * 0x1.0p-53;
  }
};

}  // namespace fwdcurve
