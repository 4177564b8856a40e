#include "kolmo/philox.hpp"

#include <cmath>
#include <numbers>

namespace kolmo {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

PhiloxCounter philox4x32(PhiloxCounter c, PhiloxKey k) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kW0;
    k[1] += kW1;
  }
  return c;
}

void path_normals(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::span<double> out) noexcept {
  const PhiloxKey key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  for (std::size_t j = 0; j < out.size(); j += 2) {
    const PhiloxCounter ctr{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(j / 2),
                            static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
    const PhiloxCounter r = philox4x32(ctr, key);
    const double u1 = unit_open_closed(r[0], r[1]);
    const double u2 = unit_open_closed(r[2], r[3]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    out[j] = rad * std::cos(ang);
    if (j + 1 < out.size()) out[j + 1] = rad * std::sin(ang);
  }
}

}  // namespace kolmo
