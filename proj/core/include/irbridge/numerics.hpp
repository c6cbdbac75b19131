#pragma once

#include <bit>
#include <cstdint>
#include <cstdlib>
#include <string>

namespace irbridge {

/// Distance in representable doubles between a and b (0 when bitwise equal).
/// Values must be finite.
inline std::uint64_t ulp_distance(double a, double b) {
  auto ordered = [](double x) -> std::int64_t {
    auto bits = std::bit_cast<std::int64_t>(x);
    return bits < 0 ? std::int64_t(0x8000000000000000ull) - bits : bits;
  };
  const std::int64_t ia = ordered(a);
  const std::int64_t ib = ordered(b);
  return ia > ib ? static_cast<std::uint64_t>(ia - ib) : static_cast<std::uint64_t>(ib - ia);
}

/// %.17g rendering; round-trips doubles exactly through text.
std::string format_g17(double v);

/// FNV-1a 64-bit hash, used to stamp reports with a config fingerprint.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::string to_hex(std::uint64_t v);

}  // namespace irbridge
