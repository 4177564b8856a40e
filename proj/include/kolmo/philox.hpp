#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).

#include <array>
#include <cstdint>
#include <span>

namespace kolmo {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) noexcept;

/// Standard normals for (seed, path, step): out[j] comes from block j/2 of the
/// counter (step, j/2, path), step < 2^32, Box-Muller on two 53-bit uniforms per pair.
void path_normals(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::span<double> out) noexcept;

/// Uniform on (0, 1] from two 32-bit words.
inline double unit_open_closed(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

}  // namespace kolmo
