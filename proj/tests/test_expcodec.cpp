#include <doctest.h>

#include "cassandra/expcodec.hpp"
#include "cassandra/rng.hpp"
#include "test_util.hpp"

using namespace cassandra;

TEST_CASE("codebook ranks symbols by frequency, ties ascending") {
  std::vector<std::uint8_t> exps{126, 126, 126, 127, 127, 125};
  auto cb = UnaryCodebook::build(exps);
  CHECK(cb.ranked_symbols() == std::vector<std::uint8_t>{126, 127, 125});
  CHECK(cb.rank(126) == 0);
  CHECK(cb.rank(127) == 1);
  CHECK(cb.rank(125) == 2);
  CHECK(cb.rank(200) == -1);

  std::vector<std::uint8_t> single{42, 42};
  CHECK(UnaryCodebook::build(single).ranked_symbols() == std::vector<std::uint8_t>{42});

  std::vector<std::uint8_t> tie{20, 10};
  CHECK(UnaryCodebook::build(tie).ranked_symbols() == std::vector<std::uint8_t>{10, 20});
}

TEST_CASE("codebook is a pure function of the multiset") {
  SplitMix64 rng(5);
  std::vector<std::uint8_t> a;
  for (int i = 0; i < 500; ++i) a.push_back(static_cast<std::uint8_t>(rng.below(12) + 120));
  std::vector<std::uint8_t> b(a.rbegin(), a.rend());
  CHECK(UnaryCodebook::build(a).ranked_symbols() ==
        UnaryCodebook::build(b).ranked_symbols());
}

TEST_CASE("from_ranked rejects duplicates") {
  CHECK_THROWS_AS(UnaryCodebook::from_ranked({1, 2, 1}), std::invalid_argument);
}

TEST_CASE("unary encode frozen bit patterns") {
  auto cb = UnaryCodebook::from_ranked({10, 11, 12});

  std::vector<std::uint8_t> all_rank0{10, 10, 10};
  auto bits = unary_encode(all_rank0, cb);
  CHECK(bits.bit_size() == 3);
  CHECK(bits.bytes()[0] == 0b11100000);

  std::vector<std::uint8_t> seq{12, 10, 11};  // ranks 2,0,1 -> 001 1 01
  bits = unary_encode(seq, cb);
  CHECK(bits.bit_size() == 6);
  CHECK(bits.bytes()[0] == 0b00110100);
}

TEST_CASE("sequential decode inverts encode") {
  auto cb = UnaryCodebook::from_ranked({12, 10, 11});
  Bitstream bits;
  bits.push_bits(0b001101, 6);
  auto out = unary_decode_sequential(bits, cb, 3);
  CHECK(out == std::vector<std::uint8_t>{11, 12, 10});  // ranks 2,0,1

  Bitstream one;
  one.push_bit(1);
  CHECK(unary_decode_sequential(one, cb, 1) == std::vector<std::uint8_t>{12});

  Bitstream bad;  // "00": no terminator
  bad.push_bits(0b00, 2);
  CHECK_THROWS_WITH_AS(unary_decode_sequential(bad, cb, 1), "truncated stream",
                       std::runtime_error);
}

TEST_CASE("decode rejects ranks beyond the codebook") {
  auto cb = UnaryCodebook::from_ranked({7});
  Bitstream bits;
  bits.push_bits(0b001, 3);  // rank 2, codebook has 1 entry
  CHECK_THROWS_AS(unary_decode_sequential(bits, cb, 1), std::exception);
}

TEST_CASE("shannon entropy") {
  std::vector<std::uint8_t> uniform{1, 2, 3, 4};
  CHECK(shannon_entropy(uniform) == doctest::Approx(2.0));

  std::vector<std::uint8_t> single{9, 9, 9};
  CHECK(shannon_entropy(single) == doctest::Approx(0.0));

  std::vector<std::uint8_t> skew{1, 1, 2, 3};  // {0.5, 0.25, 0.25}
  CHECK(shannon_entropy(skew) == doctest::Approx(1.5));
}

TEST_CASE("average unary bits") {
  std::vector<std::uint8_t> all0{5, 5, 5};
  auto cb = UnaryCodebook::build(all0);
  CHECK(avg_unary_bits(all0, cb) == doctest::Approx(1.0));

  std::vector<std::uint8_t> skew{1, 1, 2, 3};  // ranks 0,0,1,2
  cb = UnaryCodebook::build(skew);
  CHECK(avg_unary_bits(skew, cb) == doctest::Approx(1.75));
}

TEST_CASE("unary never beats the entropy bound") {
  SplitMix64 rng(77);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::uint8_t> exps;
    std::size_t n = 10 + rng.below(2000);
    for (std::size_t i = 0; i < n; ++i)
      exps.push_back(static_cast<std::uint8_t>(rng.below(1 + rng.below(40))));
    auto cb = UnaryCodebook::build(exps);
    CHECK(avg_unary_bits(exps, cb) >= shannon_entropy(exps) - 1e-12);
  }
}

TEST_CASE("mx encode: shared exponent and shifts") {
  std::vector<Bf16> ones(8, Bf16{0x3F80});
  auto blk = mx_encode_block(ones);
  CHECK(blk.shared_exponent == 127);
  for (const auto& e : blk.elements) {
    CHECK(e.sign == 0);
    CHECK(e.shifted_mantissa == 0b10000000);
  }

  std::vector<Bf16> two_one{Bf16{0x4000}, Bf16{0x3F80}};  // 2.0, 1.0
  blk = mx_encode_block(two_one);
  CHECK(blk.shared_exponent == 128);
  CHECK(blk.elements[0].shifted_mantissa == 0b10000000);
  CHECK(blk.elements[1].shifted_mantissa == 0b01000000);

  // exponent gap > 7 annihilates the small element
  std::vector<Bf16> gap{compose(0, 130, 0), compose(0, 121, 0x7f)};
  blk = mx_encode_block(gap);
  CHECK(blk.shared_exponent == 130);
  CHECK(blk.elements[1].shifted_mantissa == 0);
}

TEST_CASE("mx decode and renormalization") {
  auto r = mx_decode_element(127, 0, 0b10000000);
  CHECK(!r.underflowed);
  CHECK(r.value.bits == 0x3F80);

  r = mx_decode_element(128, 0, 0b01000000);  // one leading zero renormalizes
  CHECK(!r.underflowed);
  CHECK(r.value.bits == 0x3F80);

  r = mx_decode_element(140, 1, 0);
  CHECK(to_float(r.value) == 0.0f);
  CHECK(decompose(r.value).sign == 1);

  // shared_exponent - shift below 1: underflow to signed zero
  r = mx_decode_element(3, 0, 0b00000100);  // 5 leading zeros, 3 - 5 < 1
  CHECK(r.underflowed);
  CHECK(r.value.bits == 0x0000);
}

TEST_CASE("mx round trip within one block is shift-lossy only") {
  SplitMix64 rng(31);
  for (int t = 0; t < 100; ++t) {
    auto vals = testutil::random_values(rng, kMxBlockSize, 100, 140, 0);
    auto blk = mx_encode_block(vals);
    for (std::size_t i = 0; i < vals.size(); ++i) {
      auto f = decompose(vals[i]);
      unsigned shift = blk.shared_exponent - f.exponent;
      auto dec =
          mx_decode_element(blk.shared_exponent, f.sign, blk.elements[i].shifted_mantissa);
      if (shift == 0) CHECK(dec.value == vals[i]);  // zero-shift is exact
      // never overshoots the original magnitude (truncation toward zero)
      CHECK(std::fabs(to_float(dec.value)) <= std::fabs(to_float(vals[i])));
    }
  }
}
