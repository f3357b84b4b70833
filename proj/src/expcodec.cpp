#include "cassandra/expcodec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cassandra {

UnaryCodebook UnaryCodebook::build(std::span<const std::uint8_t> exponents) {
  if (exponents.empty()) throw std::invalid_argument("empty exponent sequence");
  std::array<std::uint64_t, 256> freq{};
  for (std::uint8_t e : exponents) ++freq[e];
  std::vector<std::uint8_t> ranked;
  for (int v = 0; v < 256; ++v)
    if (freq[v] > 0) ranked.push_back(static_cast<std::uint8_t>(v));
  std::stable_sort(ranked.begin(), ranked.end(), [&](std::uint8_t a, std::uint8_t b) {
    if (freq[a] != freq[b]) return freq[a] > freq[b];
    return a < b;  // equal frequency: ascending exponent value
  });
  return from_ranked(std::move(ranked));
}

UnaryCodebook UnaryCodebook::from_ranked(std::vector<std::uint8_t> ranked_symbols) {
  UnaryCodebook cb;
  cb.rank_of_.fill(-1);
  for (std::size_t r = 0; r < ranked_symbols.size(); ++r) {
    if (cb.rank_of_[ranked_symbols[r]] != -1)
      throw std::invalid_argument("duplicate symbol in codebook");
    cb.rank_of_[ranked_symbols[r]] = static_cast<std::int16_t>(r);
  }
  cb.ranked_ = std::move(ranked_symbols);
  return cb;
}

Bitstream unary_encode(std::span<const std::uint8_t> exponents,
                       const UnaryCodebook& codebook) {
  Bitstream out;
  for (std::uint8_t e : exponents) {
    int r = codebook.rank(e);
    if (r < 0) throw std::invalid_argument("exponent not present in codebook");
    for (int i = 0; i < r; ++i) out.push_bit(0);
    out.push_bit(1);
  }
  return out;
}

std::vector<std::uint8_t> unary_decode_sequential(const Bitstream& bits,
                                                  const UnaryCodebook& codebook,
                                                  std::size_t count) {
  BitReader r(bits);
  std::vector<std::uint8_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t zeros = 0;
    for (;;) {
      if (r.remaining() == 0) throw std::runtime_error("truncated stream");
      if (r.read_bit()) break;
      ++zeros;
    }
    if (zeros >= codebook.size()) throw std::runtime_error("rank outside codebook");
    out.push_back(codebook.symbol(zeros));
  }
  return out;
}

double shannon_entropy(std::span<const std::uint8_t> exponents) {
  if (exponents.empty()) throw std::invalid_argument("empty exponent sequence");
  std::array<std::uint64_t, 256> freq{};
  for (std::uint8_t e : exponents) ++freq[e];
  double n = static_cast<double>(exponents.size());
  double h = 0.0;
  for (std::uint64_t f : freq) {
    if (f == 0) continue;
    double p = static_cast<double>(f) / n;
    h -= p * std::log2(p);
  }
  return h;
}

double avg_unary_bits(std::span<const std::uint8_t> exponents,
                      const UnaryCodebook& codebook) {
  if (exponents.empty()) throw std::invalid_argument("empty exponent sequence");
  std::uint64_t total = 0;
  for (std::uint8_t e : exponents) {
    int r = codebook.rank(e);
    if (r < 0) throw std::invalid_argument("exponent not present in codebook");
    total += static_cast<std::uint64_t>(r) + 1;
  }
  return static_cast<double>(total) / static_cast<double>(exponents.size());
}

MxBlock mx_encode_block(std::span<const Bf16> values) {
  if (values.size() > kMxBlockSize)
    throw std::invalid_argument("MX block holds at most 32 elements");
  MxBlock block;
  std::uint8_t shared = 0;
  for (Bf16 v : values) {
    if (is_inf_or_nan(v)) throw std::invalid_argument("non-finite");
    auto f = decompose(flush_denormal(v));
    shared = std::max(shared, f.exponent);
  }
  block.shared_exponent = shared;
  for (Bf16 v : values) {
    auto f = decompose(flush_denormal(v));
    std::uint8_t sm = 0;
    if (f.exponent != 0 || f.mantissa != 0) {
      unsigned significand = 0x80u | f.mantissa;  // explicit leading 1
      unsigned shift = shared - f.exponent;
      sm = shift >= 8 ? 0 : static_cast<std::uint8_t>(significand >> shift);
    }
    block.elements.push_back(MxElement{f.sign, sm});
  }
  return block;
}

MxDecodeResult mx_decode_element(std::uint8_t shared_exponent, std::uint8_t sign,
                                 std::uint8_t shifted_mantissa) {
  if (shifted_mantissa == 0) return {compose(sign, 0, 0), false};
  unsigned z = 0;
  while (((shifted_mantissa << z) & 0x80u) == 0) ++z;
  int exponent = static_cast<int>(shared_exponent) - static_cast<int>(z);
  if (exponent < 1) return {compose(sign, 0, 0), true};  // underflow clamps to zero
  std::uint8_t mantissa = static_cast<std::uint8_t>((shifted_mantissa << z) & 0x7fu);
  return {compose(sign, static_cast<std::uint8_t>(exponent), mantissa), false};
}

}  // namespace cassandra
