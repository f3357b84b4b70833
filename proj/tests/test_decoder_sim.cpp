#include <doctest.h>

#include "cassandra/decoder_sim.hpp"
#include "cassandra/rng.hpp"
#include "test_util.hpp"

using namespace cassandra;
using namespace cassandra::testutil;

TEST_CASE("parallel zero counter on single chunks") {
  auto r = parallel_zero_count(0b00100101);
  CHECK(r.zero_run_outputs == std::vector<std::uint32_t>{2, 2, 1});
  CHECK(r.num_ones == 3);
  CHECK(r.last_bit == 1);

  r = parallel_zero_count(0b11111111);
  CHECK(r.zero_run_outputs == std::vector<std::uint32_t>(8, 0));
  CHECK(r.num_ones == 8);
  CHECK(r.last_bit == 1);

  r = parallel_zero_count(0b00000000);
  CHECK(r.zero_run_outputs.empty());
  CHECK(r.num_ones == 0);
  CHECK(r.last_bit == 0);
}

TEST_CASE("codeword spanning a chunk boundary") {
  // 9 zeros then a one: single rank-9 symbol crossing the first chunk
  auto cb = UnaryCodebook::from_ranked({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  Bitstream bits;
  for (int i = 0; i < 9; ++i) bits.push_bit(0);
  bits.push_bit(1);
  auto out = parallel_unary_decode(bits, cb, 1);
  CHECK(out == std::vector<std::uint8_t>{9});
}

TEST_CASE("all rank-0 stream decodes one symbol per bit") {
  auto cb = UnaryCodebook::from_ranked({200});
  Bitstream bits;
  for (int i = 0; i < 21; ++i) bits.push_bit(1);
  auto out = parallel_unary_decode(bits, cb, 21);
  CHECK(out == std::vector<std::uint8_t>(21, 200));
}

TEST_CASE("parallel decode matches the sequential oracle") {
  SplitMix64 rng(97);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t nsyms = 1 + rng.below(20);
    std::vector<std::uint8_t> ranked;
    for (std::size_t i = 0; i < nsyms; ++i) ranked.push_back(static_cast<std::uint8_t>(i));
    auto cb = UnaryCodebook::from_ranked(ranked);

    std::size_t count = 1 + rng.below(400);
    std::vector<std::uint8_t> symbols;
    for (std::size_t i = 0; i < count; ++i)
      symbols.push_back(static_cast<std::uint8_t>(rng.below(nsyms)));
    auto bits = unary_encode(symbols, cb);

    CHECK(parallel_unary_decode(bits, cb, count) ==
          unary_decode_sequential(bits, cb, count));
    CHECK(parallel_unary_decode(bits, cb, count) == symbols);
  }
}

TEST_CASE("parallel decode rejects truncated streams") {
  auto cb = UnaryCodebook::from_ranked({1, 2, 3});
  Bitstream bits;
  bits.push_bits(0b00, 2);
  CHECK_THROWS_AS(parallel_unary_decode(bits, cb, 1), std::exception);
}

TEST_CASE("mx normalize") {
  auto r = mx_normalize(0b10000000);
  CHECK(r.shift == 0);
  CHECK(r.normalized == 0);
  CHECK(!r.is_zero);

  r = mx_normalize(0b01000000);
  CHECK(r.shift == 1);
  CHECK(r.normalized == 0);
  CHECK(!r.is_zero);

  r = mx_normalize(0b00000101);
  CHECK(r.shift == 5);
  CHECK(r.normalized == 0b0100000);

  r = mx_normalize(0);
  CHECK(r.is_zero);
}

namespace {

CassandraTensor random_container(SplitMix64& rng, std::size_t n, int mode) {
  auto vals = random_values(rng, n, 100, 150);
  auto bm = random_bitmap(rng, n);
  return encode_tensor(vals, bm, mode, static_cast<int>(rng.below(6)));
}

}  // namespace

TEST_CASE("streaming decode matches the container decoders") {
  SplitMix64 rng(101);
  for (int mode : {1, 2}) {
    for (int trial = 0; trial < 20; ++trial) {
      auto t = random_container(rng, 50 + rng.below(4000), mode);
      for (View view : {View::target, View::draft}) {
        auto header = StreamingHeader::from_container(t, view);
        auto sbs = pack(t, view);
        auto res = streaming_decode(sbs, header);
        auto expect = view == View::target ? decode_target(t) : decode_draft(t);
        CHECK(res.values == expect);
        CHECK(res.max_buffered_bytes <= 256);
      }
    }
  }
}

TEST_CASE("tensor fitting one superblock decodes from it") {
  SplitMix64 rng(103);
  auto vals = random_values(rng, 40, 120, 130);
  auto t = encode_tensor(vals, random_bitmap(rng, 40), 1, 4);
  auto sbs = pack(t, View::target);
  REQUIRE(sbs.size() == 1);
  auto res = streaming_decode(sbs, StreamingHeader::from_container(t, View::target));
  CHECK(res.values == decode_target(t));
}

TEST_CASE("swapped blocks trigger the out-of-order check") {
  SplitMix64 rng(107);
  auto t = random_container(rng, 6000, 1);
  auto sbs = pack(t, View::target);
  std::vector<TaggedBlock> blocks;
  for (const auto& sb : sbs)
    for (const auto& b : sb.blocks) blocks.push_back(b);
  REQUIRE(blocks.size() > 8);

  // find two adjacent blocks of different type beyond the warm-up set and swap
  bool swapped = false;
  for (std::size_t i = 6; i + 1 < blocks.size(); ++i) {
    if (blocks[i].type != blocks[i + 1].type) {
      std::swap(blocks[i], blocks[i + 1]);
      swapped = true;
      break;
    }
  }
  REQUIRE(swapped);
  auto header = StreamingHeader::from_container(t, View::target);
  CHECK_THROWS_AS(streaming_decode(blocks, header), FormatError);
}
