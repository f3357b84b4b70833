#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace cassandra {

// BFloat16 bit pattern. Layout: 1 sign bit, 8 exponent bits (bias 127),
// 7 mantissa bits. Stored as the raw 16-bit pattern; arithmetic happens in
// float after widening.
struct Bf16 {
  std::uint16_t bits = 0;

  constexpr bool operator==(const Bf16&) const = default;
};

struct Bf16Fields {
  std::uint8_t sign;      // 1 bit
  std::uint8_t exponent;  // 8 bits, bias 127
  std::uint8_t mantissa;  // 7 fraction bits
};

constexpr Bf16Fields decompose(Bf16 b) {
  return Bf16Fields{
      static_cast<std::uint8_t>(b.bits >> 15),
      static_cast<std::uint8_t>((b.bits >> 7) & 0xff),
      static_cast<std::uint8_t>(b.bits & 0x7f),
  };
}

constexpr Bf16 compose(std::uint8_t sign, std::uint8_t exponent,
                       std::uint8_t mantissa) {
  return Bf16{static_cast<std::uint16_t>(((sign & 1u) << 15) |
                                         (static_cast<unsigned>(exponent) << 7) |
                                         (mantissa & 0x7fu))};
}

constexpr bool is_inf_or_nan(Bf16 b) { return decompose(b).exponent == 255; }

constexpr bool is_denormal(Bf16 b) {
  auto f = decompose(b);
  return f.exponent == 0 && f.mantissa != 0;
}

// Denormals are flushed to signed zero before encoding.
constexpr Bf16 flush_denormal(Bf16 b) {
  return is_denormal(b) ? compose(decompose(b).sign, 0, 0) : b;
}

inline float to_float(Bf16 b) {
  return std::bit_cast<float>(static_cast<std::uint32_t>(b.bits) << 16);
}

// Round-to-nearest-even on the dropped 16 mantissa bits.
inline Bf16 round_f32_to_bf16(float x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite");
  std::uint32_t u = std::bit_cast<std::uint32_t>(x);
  u += 0x7fffu + ((u >> 16) & 1u);
  return Bf16{static_cast<std::uint16_t>(u >> 16)};
}

}  // namespace cassandra
