#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "cassandra/bf16.hpp"
#include "cassandra/bitstream.hpp"

namespace cassandra {

// Frequency-ranked mapping between 8-bit exponents and unary codeword ranks.
// Rank r encodes as r zeros followed by a one. Equal frequencies are ordered
// by ascending exponent value so the codebook is a pure function of the
// exponent multiset.
class UnaryCodebook {
 public:
  static UnaryCodebook build(std::span<const std::uint8_t> exponents);
  static UnaryCodebook from_ranked(std::vector<std::uint8_t> ranked_symbols);

  std::size_t size() const { return ranked_.size(); }
  std::uint8_t symbol(std::size_t rank) const { return ranked_.at(rank); }
  // -1 when the exponent is not in the codebook
  int rank(std::uint8_t exponent) const { return rank_of_[exponent]; }
  const std::vector<std::uint8_t>& ranked_symbols() const { return ranked_; }

 private:
  std::vector<std::uint8_t> ranked_;
  std::array<std::int16_t, 256> rank_of_{};
};

Bitstream unary_encode(std::span<const std::uint8_t> exponents,
                       const UnaryCodebook& codebook);

// Left-to-right decode of exactly `count` symbols; the oracle the parallel
// decoder is checked against.
std::vector<std::uint8_t> unary_decode_sequential(const Bitstream& bits,
                                                  const UnaryCodebook& codebook,
                                                  std::size_t count);

// -sum p_i log2 p_i over the empirical exponent distribution
double shannon_entropy(std::span<const std::uint8_t> exponents);

double avg_unary_bits(std::span<const std::uint8_t> exponents,
                      const UnaryCodebook& codebook);

// Shared 8-bit exponent plus fixed-point shifted significands for a block of
// up to 32 elements. shifted_mantissa holds 1 integer bit + 7 fraction bits of
// the BF16 significand, right-shifted by (shared_exponent - element_exponent)
// with truncation toward zero.
struct MxElement {
  std::uint8_t sign;
  std::uint8_t shifted_mantissa;
};

struct MxBlock {
  std::uint8_t shared_exponent = 0;
  std::vector<MxElement> elements;
};

inline constexpr std::size_t kMxBlockSize = 32;

MxBlock mx_encode_block(std::span<const Bf16> values);

struct MxDecodeResult {
  Bf16 value;
  bool underflowed;  // shared_exponent - leading zeros fell below 1
};

MxDecodeResult mx_decode_element(std::uint8_t shared_exponent, std::uint8_t sign,
                                 std::uint8_t shifted_mantissa);

}  // namespace cassandra
